#include "rap/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "rap/parallel.hpp"
#include "rap/rng.hpp"
#include "rap/sh.hpp"

namespace rap {

std::vector<double> color_anisotropy(const SplatScene& scene, int directions, std::uint64_t seed) {
    if (directions < 2) throw invalid_argument("color_anisotropy: need at least 2 directions");
    std::size_t n = scene.count;

    // One shared direction set for the whole scene.
    Rng rng(seed, RngStream::anisotropy_directions);
    std::vector<Vec3d> dirs(static_cast<std::size_t>(directions));
    for (auto& d : dirs) d = rng.unit_sphere_dir();

    std::vector<double> out(n);
    parallel_for(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            double acc = 0.0;
            for (int c = 0; c < 3; ++c) {
                double dc = scene.sh_dc[3 * i + c];
                const float* rest = &scene.sh_rest[45 * i + 15 * c];
                double sum = 0.0, sumsq = 0.0;
                for (const Vec3d& d : dirs) {
                    double v = sh_eval_channel(dc, rest, d);
                    sum += v;
                    sumsq += v * v;
                }
                double mu = sum / directions;
                double var = std::max(0.0, sumsq / directions - mu * mu);
                acc += std::sqrt(var);
            }
            out[i] = acc / 3.0;
        }
    });
    return out;
}

std::vector<double> dc_color(const SplatScene& scene) {
    std::size_t n = scene.count;
    std::vector<double> out(n);
    parallel_for(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            double s = 0.0;
            for (int c = 0; c < 3; ++c) s += 0.5 + kShC0 * scene.sh_dc[3 * i + c];
            out[i] = s / 3.0;
        }
    });
    return out;
}

RawFeatures compute_raw(const SplatScene& scene, const NeighborTable& table, int directions,
                        std::uint64_t seed) {
    std::size_t n = scene.count;
    if (table.n != n) throw invalid_argument("compute_raw: neighbor table size mismatch");

    std::vector<double> d = avg_knn_distance(table);
    std::vector<double> a = color_anisotropy(scene, directions, seed);

    RawFeatures raw;
    raw.n = n;
    raw.data.resize(n * kRawFeatureCount);
    parallel_for(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            double s[3];
            for (int k = 0; k < 3; ++k) s[k] = exp_activation(scene.scale_raw[3 * i + k]);
            std::sort(s, s + 3);
            double o = sigmoid_activation(scene.opacity_raw[i]);
            double c = 0.0;
            for (int k = 0; k < 3; ++k) c += 0.5 + kShC0 * scene.sh_dc[3 * i + k];
            c /= 3.0;
            double* row = &raw.data[i * kRawFeatureCount];
            row[0] = d[i];
            row[1] = a[i];
            row[2] = s[0];
            row[3] = s[1];
            row[4] = s[2];
            row[5] = s[0] * s[1] * s[2];
            row[6] = o;
            row[7] = c;
        }
    });
    return raw;
}

double percentile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw invalid_argument("percentile of empty vector");
    if (sorted.size() == 1) return sorted[0];
    double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
    rank = std::min(std::max(rank, 0.0), static_cast<double>(sorted.size() - 1));
    std::size_t lo = static_cast<std::size_t>(rank);
    if (lo >= sorted.size() - 1) return sorted.back();
    double frac = rank - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

namespace {

// Clip a column to its [lo, hi] percentiles, then map affinely to [0,1].
// A degenerate range collapses the column to 0.5.
void clip_rescale(std::vector<double>& col, double clip_lo, double clip_hi) {
    std::vector<double> sorted(col);
    std::sort(sorted.begin(), sorted.end());
    double lo = percentile_sorted(sorted, clip_lo);
    double hi = percentile_sorted(sorted, clip_hi);
    if (!(hi > lo)) {
        std::fill(col.begin(), col.end(), 0.5);
        return;
    }
    double inv = 1.0 / (hi - lo);
    for (double& v : col) v = std::min(1.0, std::max(0.0, (v - lo) * inv));
}

}  // namespace

FeatureMatrix normalize_features(const RawFeatures& raw, const NeighborTable& table, double clip_lo,
                                 double clip_hi) {
    std::size_t n = raw.n;
    if (table.n != n) throw invalid_argument("normalize_features: neighbor table size mismatch");
    if (!(clip_lo >= 0.0 && clip_hi <= 100.0 && clip_lo <= clip_hi))
        throw invalid_argument("normalize_features: bad percentile range");

    FeatureMatrix out;
    out.n = n;
    out.data.resize(n * kFeatureCount);

    std::vector<double> col(n), zcol(n), mu_l, sd_l;
    for (int f = 0; f < kRawFeatureCount; ++f) {
        for (std::size_t i = 0; i < n; ++i) col[i] = raw.at(i, f);

        if (f < 7) {
            // Scene-wide z-score (population std, deterministic chunked sums).
            double sum = deterministic_sum(n, [&](std::size_t i) { return col[i]; });
            double mu = sum / static_cast<double>(n);
            double sq = deterministic_sum(n, [&](std::size_t i) { return (col[i] - mu) * (col[i] - mu); });
            double sd = std::max(std::sqrt(sq / static_cast<double>(n)), kSigmaFloor);
            for (std::size_t i = 0; i < n; ++i) zcol[i] = (col[i] - mu) / sd;
            clip_rescale(zcol, clip_lo, clip_hi);
            for (std::size_t i = 0; i < n; ++i)
                out.data[i * kFeatureCount + static_cast<std::size_t>(f)] = static_cast<float>(zcol[i]);
        }

        // Neighborhood z-score for every raw feature (local column index 7 + f).
        local_stats(col, table, mu_l, sd_l);
        for (std::size_t i = 0; i < n; ++i) zcol[i] = (col[i] - mu_l[i]) / sd_l[i];
        clip_rescale(zcol, clip_lo, clip_hi);
        for (std::size_t i = 0; i < n; ++i)
            out.data[i * kFeatureCount + static_cast<std::size_t>(7 + f)] = static_cast<float>(zcol[i]);
    }
    return out;
}

FeatureMatrix compute_features(const SplatScene& scene, const FeatureParams& params,
                               bool* degenerate_neighbors) {
    std::size_t n = scene.count;
    if (n == 0) {
        if (degenerate_neighbors) *degenerate_neighbors = false;
        return FeatureMatrix{0, {}};
    }
    if (n == 1) {
        // No neighborhood exists; every column is degenerate and maps to 0.5.
        if (degenerate_neighbors) *degenerate_neighbors = true;
        FeatureMatrix m;
        m.n = 1;
        m.data.assign(kFeatureCount, 0.5f);
        return m;
    }
    NeighborTable table = build_knn(scene.positions, n, params.k);
    if (degenerate_neighbors) *degenerate_neighbors = table.degenerate;
    RawFeatures raw = compute_raw(scene, table, params.directions, params.seed);
    return normalize_features(raw, table, params.clip_lo, params.clip_hi);
}

namespace {

void write_header(std::ofstream& f, const char magic[4], std::uint64_t n) {
    f.write(magic, 4);
    std::uint32_t version = 1;
    f.write(reinterpret_cast<const char*>(&version), 4);
    f.write(reinterpret_cast<const char*>(&n), 8);
}

std::uint64_t read_header(std::ifstream& f, const char magic[4], const std::string& path) {
    char m[4];
    std::uint32_t version = 0;
    std::uint64_t n = 0;
    f.read(m, 4);
    f.read(reinterpret_cast<char*>(&version), 4);
    f.read(reinterpret_cast<char*>(&n), 8);
    if (!f || std::memcmp(m, magic, 4) != 0)
        throw format_error("bad magic in " + path + " (expected " + std::string(magic, 4) + ")");
    if (version != 1) throw format_error("unsupported version in " + path);
    return n;
}

}  // namespace

void save_features(const FeatureMatrix& m, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw io_error("cannot open for writing: " + path);
    write_header(f, "RAPF", m.n);
    f.write(reinterpret_cast<const char*>(m.data.data()), static_cast<std::streamsize>(m.data.size() * 4));
    if (!f) throw io_error("write failed: " + path);
}

FeatureMatrix load_features(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open file: " + path);
    FeatureMatrix m;
    m.n = read_header(f, "RAPF", path);
    m.data.resize(m.n * kFeatureCount);
    f.read(reinterpret_cast<char*>(m.data.data()), static_cast<std::streamsize>(m.data.size() * 4));
    if (!f) throw format_error("feature file truncated: " + path);
    return m;
}

}  // namespace rap
