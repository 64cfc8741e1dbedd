#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rap/camera_io.hpp"
#include "rap/losses.hpp"
#include "rap/mlp.hpp"
#include "rap/splat_scene.hpp"

namespace rap {

struct TrainConfig {
    double lambda_dssim = 0.2;
    LossWeights weights;          // render 1.0, prune 1.0, entropy 0.25
    double score_target = 0.5;    // S_target
    int bins = 250;
    double sigma_hist = 0.01;
    std::int64_t iterations = 15000;
    std::uint64_t seed = 0;
    double lr = 1e-3;
    std::int64_t lr_decay_iteration = 10000;
    double lr_decay_factor = 5.0;
    bool covariance_path = true;  // scale term of the soft reweighting gradient
    Vec3d background{0, 0, 0};
    FeatureParams features;       // K, M, clip percentiles

    void validate() const;
};

struct TrainScene {
    SplatScene scene;
    std::vector<CameraView> views;
    FeatureMatrix features;  // precomputed once per scene (score-independent)
};

// Builds a TrainScene with features computed from cfg.features.
TrainScene make_train_scene(SplatScene scene, std::vector<CameraView> views, const TrainConfig& cfg);

struct TrainLogRow {
    std::int64_t iter = 0;
    double render_loss = 0.0;
    double prune_loss = 0.0;
    double entropy_loss = 0.0;
    double total = 0.0;
    double mean_score = 0.0;
};

struct TrainResult {
    MlpWeights weights;
    std::vector<TrainLogRow> log;
};

// One (scene, view) sample per iteration: MLP forward over the whole scene,
// soft-reweighted render, loss backward chain, Adam step. Throws
// numeric_error with an iteration dump if the loss goes non-finite.
TrainResult train(const std::vector<TrainScene>& scenes, const TrainConfig& cfg,
                  const MlpWeights* initial = nullptr);

// CSV: iter,render_loss,prune_loss,entropy_loss,total,mean_score
void save_train_log(const std::vector<TrainLogRow>& log, const std::string& path);
std::string train_log_to_csv(const std::vector<TrainLogRow>& log);

}  // namespace rap
