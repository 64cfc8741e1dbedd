#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rap/mlp.hpp"
#include "rap/scoring.hpp"
#include "rap/splat_scene.hpp"

namespace rap {

// "visibility-lite" baseline: per-view pixel-hit counts (alpha >= 1/255)
// times activated opacity times a volume attenuation
// gamma(V) = (min(V, V_p90)/V_p90)^0.1, min-max rescaled to [0,1]. A
// simplification of projected-area significance scoring; documented as such.
struct VisibilityResult {
    std::vector<float> scores;
    std::vector<std::int64_t> hit_counts;
    std::vector<double> raw;
    bool all_zero = false;
};

VisibilityResult visibility_score(const SplatScene& scene, const std::vector<CameraView>& views);

enum class RateMode { bytes, count };

// For each retention ratio: prune, render every eval view, average PSNR.
// Rate is the serialized PLY size (bytes) or the retained count.
RdCurve retention_curve(const SplatScene& scene, const std::vector<float>& scores,
                        const std::vector<CameraView>& eval_views, const std::vector<double>& ratios,
                        RateMode rate_mode = RateMode::bytes, const Vec3d& background = {0, 0, 0});

// Fixed-topology fit loop: gradient descent on position / opacity / scale /
// DC color against ground-truth views, with periodic bottom-fraction pruning
// by the configured scorer. No densification.
struct FitConfig {
    std::int64_t iterations = 4500;
    double lambda_dssim = 0.2;
    double lr_position = 5e-4;
    double lr_opacity = .025;
    double lr_scale = 2.5e-3;
    double lr_color = 2.5e-3;
    std::int64_t prune_period = 1500;
    double drop_fraction = 0.40;
    std::string score_method = "opacity";  // opacity | rap | none
    const MlpWeights* rap_weights = nullptr;
    FeatureParams features;
    std::uint64_t seed = 0;
    Vec3d background{0, 0, 0};
};

struct FitLogRow {
    std::int64_t iter = 0;
    double loss = 0.0;
    std::size_t primitives = 0;
};

struct FitResult {
    SplatScene scene;
    std::vector<FitLogRow> log;
};

FitResult fit_scene(const SplatScene& initial, const std::vector<CameraView>& views, const FitConfig& cfg);

}  // namespace rap
