#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rap/mlp.hpp"
#include "rap/splat_scene.hpp"

namespace rap {

struct ScoreReport {
    std::vector<float> scores;
    std::vector<std::int64_t> histogram;  // hard counts, sums to N
    std::string method;
    std::string weights_sha256;  // empty for weight-free methods
    double seconds = 0.0;
    bool degenerate_neighbors = false;
};

// Rendering-free inference: build_knn -> compute_raw -> normalize -> MLP
// forward. Lives in the core library, which has no renderer dependency.
ScoreReport score_scene(const SplatScene& scene, const MlpWeights& weights, const FeatureParams& params,
                        int histogram_bins = 250);

// Baseline: activated opacity.
std::vector<float> opacity_score(const SplatScene& scene);

// Keeps ceil(retention * N) highest-scoring rows, ties to the lower index.
std::vector<bool> keep_mask_by_ratio(const std::vector<float>& scores, double retention);
SplatScene prune_by_ratio(const SplatScene& scene, const std::vector<float>& scores, double retention);

// Keeps rows with score >= tau.
std::vector<bool> keep_mask_by_threshold(const std::vector<float>& scores, double tau);
SplatScene prune_by_threshold(const SplatScene& scene, const std::vector<float>& scores, double tau);

// Hard histogram over [0,1); counts sum to N.
std::vector<std::int64_t> score_histogram(const std::vector<float>& scores, int bins);

struct PruneDirective {
    double drop_fraction = 0.0;
};

// Emits a directive every `period` iterations (never at iteration 0).
std::optional<PruneDirective> in_loop_schedule(std::int64_t iteration, std::int64_t period = 1500,
                                               double drop_fraction = 0.40);

struct RdPoint {
    double rate = 0.0;   // bytes or retained count
    double psnr = 0.0;   // dB
};

struct RdCurve {
    std::vector<RdPoint> points;  // rates strictly increasing
};

void validate_curve(const RdCurve& curve, const std::string& context);

// Bjontegaard delta-rate: cubic fit of log10(rate) over PSNR per curve,
// difference integrated over the overlapping PSNR interval; the result is
// 100*(10^mean_diff - 1), negative when `test` is cheaper at equal quality.
double bd_rate(const RdCurve& test, const RdCurve& anchor);

void save_curve_csv(const RdCurve& curve, const std::string& path);
RdCurve load_curve_csv(const std::string& path);

// Score file: magic "RAPS", version u32, count u64, then float32 scores.
void save_scores(const std::vector<float>& scores, const std::string& path);
std::vector<float> load_scores(const std::string& path);

}  // namespace rap
