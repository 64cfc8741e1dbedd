#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rap/knn.hpp"
#include "rap/splat_scene.hpp"

namespace rap {

// Raw per-primitive features, column order (d, A, s0, s1, s2, V, o, C):
// average KNN distance, color anisotropy, sorted activated scales ascending,
// volume, activated opacity, DC color mean.
inline constexpr int kRawFeatureCount = 8;

struct RawFeatures {
    std::size_t n = 0;
    std::vector<double> data;  // n x 8 row-major

    double at(std::size_t row, int col) const { return data[row * kRawFeatureCount + col]; }
};

// Final normalized matrix: columns 0..6 are scene-wide z-scores of
// (d, A, s0, s1, s2, V, o), columns 7..14 are neighborhood z-scores of
// (d, A, s0, s1, s2, V, o, C); every entry clipped to a percentile range and
// rescaled to [0,1].
inline constexpr int kFeatureCount = 15;

struct FeatureMatrix {
    std::size_t n = 0;
    std::vector<float> data;  // n x 15 row-major

    float at(std::size_t row, int col) const { return data[row * kFeatureCount + col]; }
};

// Channel-averaged std of SH color over M shared random unit directions
// (population std, unclamped evaluations).
std::vector<double> color_anisotropy(const SplatScene& scene, int directions, std::uint64_t seed);

// Mean over RGB of (0.5 + Y00 * sh_dc).
std::vector<double> dc_color(const SplatScene& scene);

RawFeatures compute_raw(const SplatScene& scene, const NeighborTable& table, int directions,
                        std::uint64_t seed);

FeatureMatrix normalize_features(const RawFeatures& raw, const NeighborTable& table, double clip_lo,
                                 double clip_hi);

struct FeatureParams {
    int k = 128;
    int directions = 64;
    double clip_lo = 1.0;
    double clip_hi = 99.0;
    std::uint64_t seed = 0;
};

// build_knn -> compute_raw -> normalize. Handles the single-primitive scene
// (no neighbors) by emitting the degenerate all-0.5 row.
FeatureMatrix compute_features(const SplatScene& scene, const FeatureParams& params,
                               bool* degenerate_neighbors = nullptr);

// Percentile by linear interpolation between order statistics (values sorted
// ascending, p in [0,100]).
double percentile_sorted(const std::vector<double>& sorted, double p);

// RAPF feature file: magic "RAPF", version u32, count u64, then n x 15
// float32 rows, all little-endian.
void save_features(const FeatureMatrix& m, const std::string& path);
FeatureMatrix load_features(const std::string& path);

}  // namespace rap
