#include "rap/knn.hpp"

#include <algorithm>
#include <cmath>

#include "rap/parallel.hpp"

namespace rap {

namespace {

struct Node {
    int axis = -1;          // -1 for leaf
    double split = 0.0;
    std::int32_t begin = 0, end = 0;  // leaf range into order[]
    std::int32_t left = -1, right = -1;
};

constexpr int kLeafSize = 16;

struct KdTree {
    const float* pts;
    std::vector<std::int32_t> order;
    std::vector<Node> nodes;

    double coord(std::int32_t i, int axis) const { return pts[3 * static_cast<std::size_t>(i) + axis]; }

    std::int32_t build(std::int32_t begin, std::int32_t end) {
        Node node;
        if (end - begin <= kLeafSize) {
            node.begin = begin;
            node.end = end;
            nodes.push_back(node);
            return static_cast<std::int32_t>(nodes.size() - 1);
        }
        // Split on the widest axis at the median.
        double lo[3] = {1e300, 1e300, 1e300}, hi[3] = {-1e300, -1e300, -1e300};
        for (std::int32_t i = begin; i < end; ++i) {
            for (int a = 0; a < 3; ++a) {
                double v = coord(order[static_cast<std::size_t>(i)], a);
                lo[a] = std::min(lo[a], v);
                hi[a] = std::max(hi[a], v);
            }
        }
        int axis = 0;
        for (int a = 1; a < 3; ++a)
            if (hi[a] - lo[a] > hi[axis] - lo[axis]) axis = a;
        std::int32_t mid = begin + (end - begin) / 2;
        std::nth_element(order.begin() + begin, order.begin() + mid, order.begin() + end,
                         [&](std::int32_t a, std::int32_t b) {
                             double ca = coord(a, axis), cb = coord(b, axis);
                             return ca < cb || (ca == cb && a < b);
                         });
        node.axis = axis;
        node.split = coord(order[static_cast<std::size_t>(mid)], axis);
        nodes.push_back(node);
        std::int32_t id = static_cast<std::int32_t>(nodes.size() - 1);
        std::int32_t l = build(begin, mid);
        std::int32_t r = build(mid, end);
        nodes[static_cast<std::size_t>(id)].left = l;
        nodes[static_cast<std::size_t>(id)].right = r;
        return id;
    }
};

// Bounded max-heap of (dist2, index) under lexicographic order; the worst
// candidate sits at the root.
struct BestK {
    std::vector<std::pair<double, std::int32_t>>& heap;
    std::size_t cap;

    static bool less(const std::pair<double, std::int32_t>& a, const std::pair<double, std::int32_t>& b) {
        return a.first < b.first || (a.first == b.first && a.second < b.second);
    }

    bool full() const { return heap.size() == cap; }
    double worst_dist2() const { return heap.front().first; }

    void offer(double d2, std::int32_t idx) {
        std::pair<double, std::int32_t> cand{d2, idx};
        if (heap.size() < cap) {
            heap.push_back(cand);
            std::push_heap(heap.begin(), heap.end(), less);
        } else if (less(cand, heap.front())) {
            std::pop_heap(heap.begin(), heap.end(), less);
            heap.back() = cand;
            std::push_heap(heap.begin(), heap.end(), less);
        }
    }
};

void query(const KdTree& tree, std::int32_t node_id, const double* q, std::int32_t self, BestK& best) {
    const Node& node = tree.nodes[static_cast<std::size_t>(node_id)];
    if (node.axis < 0) {
        for (std::int32_t i = node.begin; i < node.end; ++i) {
            std::int32_t p = tree.order[static_cast<std::size_t>(i)];
            if (p == self) continue;
            double dx = q[0] - tree.coord(p, 0);
            double dy = q[1] - tree.coord(p, 1);
            double dz = q[2] - tree.coord(p, 2);
            best.offer(dx * dx + dy * dy + dz * dz, p);
        }
        return;
    }
    double diff = q[node.axis] - node.split;
    std::int32_t near = diff < 0.0 ? node.left : node.right;
    std::int32_t far = diff < 0.0 ? node.right : node.left;
    query(tree, near, q, self, best);
    // Visit the far side unless the splitting plane is strictly beyond the
    // current worst distance (<= keeps exact tie handling).
    if (!best.full() || diff * diff <= best.worst_dist2()) query(tree, far, q, self, best);
}

}  // namespace

NeighborTable build_knn(const std::vector<float>& positions, std::size_t n, int k) {
    if (n < 2) throw invalid_argument("build_knn: need at least 2 points, got " + std::to_string(n));
    if (k < 1) throw invalid_argument("build_knn: k must be >= 1");
    if (positions.size() < n * 3) throw invalid_argument("build_knn: positions array too short");

    KdTree tree;
    tree.pts = positions.data();
    tree.order.resize(n);
    for (std::size_t i = 0; i < n; ++i) tree.order[i] = static_cast<std::int32_t>(i);
    tree.nodes.reserve(2 * n / kLeafSize + 4);
    std::int32_t root = tree.build(0, static_cast<std::int32_t>(n));

    NeighborTable table;
    table.n = n;
    table.k = k;
    table.valid = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(k), n - 1));
    table.degenerate = n <= static_cast<std::size_t>(k);
    table.indices.resize(n * static_cast<std::size_t>(k));
    table.distances.resize(n * static_cast<std::size_t>(k));

    parallel_for(n, [&](std::size_t b, std::size_t e) {
        std::vector<std::pair<double, std::int32_t>> heap;
        heap.reserve(static_cast<std::size_t>(table.valid));
        for (std::size_t i = b; i < e; ++i) {
            heap.clear();
            BestK best{heap, static_cast<std::size_t>(table.valid)};
            double q[3] = {positions[3 * i], positions[3 * i + 1], positions[3 * i + 2]};
            query(tree, root, q, static_cast<std::int32_t>(i), best);
            std::sort(heap.begin(), heap.end(), BestK::less);
            std::size_t row = i * static_cast<std::size_t>(k);
            for (int j = 0; j < table.valid; ++j) {
                table.indices[row + static_cast<std::size_t>(j)] = heap[static_cast<std::size_t>(j)].second;
                table.distances[row + static_cast<std::size_t>(j)] =
                    std::sqrt(heap[static_cast<std::size_t>(j)].first);
            }
            for (int j = table.valid; j < k; ++j) {  // pad with the farthest
                table.indices[row + static_cast<std::size_t>(j)] =
                    table.indices[row + static_cast<std::size_t>(table.valid) - 1];
                table.distances[row + static_cast<std::size_t>(j)] =
                    table.distances[row + static_cast<std::size_t>(table.valid) - 1];
            }
        }
    });
    return table;
}

std::vector<double> avg_knn_distance(const NeighborTable& table) {
    std::vector<double> out(table.n);
    std::size_t k = static_cast<std::size_t>(table.k);
    parallel_for(table.n, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < k; ++j) s += table.distances[i * k + j];
            out[i] = s / static_cast<double>(k);
        }
    });
    return out;
}

void local_stats(const std::vector<double>& values, const NeighborTable& table,
                 std::vector<double>& mean_out, std::vector<double>& std_out) {
    if (values.size() != table.n) throw invalid_argument("local_stats: values length mismatch");
    mean_out.resize(table.n);
    std_out.resize(table.n);
    std::size_t k = static_cast<std::size_t>(table.k);
    std::size_t m = static_cast<std::size_t>(table.valid);
    parallel_for(table.n, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            double sum = 0.0, sumsq = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                double v = values[static_cast<std::size_t>(table.indices[i * k + j])];
                sum += v;
                sumsq += v * v;
            }
            double mu = sum / static_cast<double>(m);
            double var = sumsq / static_cast<double>(m) - mu * mu;
            mean_out[i] = mu;
            std_out[i] = std::max(std::sqrt(std::max(0.0, var)), kSigmaFloor);
        }
    });
}

}  // namespace rap
