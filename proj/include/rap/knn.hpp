#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "rap/common.hpp"

namespace rap {

// K nearest neighbors per point, self excluded, each row sorted by
// (distance, index) ascending. For n <= k the row holds all n-1 others and is
// padded by repeating the farthest entry; `valid` is the real neighbor count
// and `degenerate` flags such tables.
struct NeighborTable {
    std::size_t n = 0;
    int k = 0;
    int valid = 0;
    bool degenerate = false;
    std::vector<std::int32_t> indices;  // n x k
    std::vector<double> distances;      // n x k, non-decreasing per row
};

// Exact KNN over 3D points (kd-tree, median splits, ties by lower index).
// positions: n x 3 floats. Throws for n < 2 or k < 1.
NeighborTable build_knn(const std::vector<float>& positions, std::size_t n, int k);

// Eq-style spatial isolation: mean of each row's K distances (padding included).
std::vector<double> avg_knn_distance(const NeighborTable& table);

// Per-row mean and population std of `values` over the (real) neighbor set.
// sigma is floored at kSigmaFloor to keep downstream divisions defined.
inline constexpr double kSigmaFloor = 1e-8;

void local_stats(const std::vector<double>& values, const NeighborTable& table,
                 std::vector<double>& mean_out, std::vector<double>& std_out);

}  // namespace rap
