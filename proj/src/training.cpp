#include "rap/training.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rap/renderer.hpp"
#include "rap/rng.hpp"

namespace rap {

void TrainConfig::validate() const {
    if (weights.render < 0.0 || weights.prune < 0.0 || weights.entropy < 0.0)
        throw invalid_argument("train config: loss weights must be >= 0");
    if (!(score_target > 0.0 && score_target < 1.0))
        throw invalid_argument("train config: score target must be in (0, 1)");
    if (bins < 2) throw invalid_argument("train config: bins must be >= 2");
    if (!(sigma_hist > 0.0)) throw invalid_argument("train config: histogram sigma must be > 0");
    if (iterations < 0) throw invalid_argument("train config: negative iteration count");
    if (!(lambda_dssim >= 0.0 && lambda_dssim <= 1.0))
        throw invalid_argument("train config: lambda_dssim must be in [0, 1]");
}

TrainScene make_train_scene(SplatScene scene, std::vector<CameraView> views, const TrainConfig& cfg) {
    TrainScene ts;
    ts.features = compute_features(scene, cfg.features);
    ts.scene = std::move(scene);
    ts.views = std::move(views);
    return ts;
}

TrainResult train(const std::vector<TrainScene>& scenes, const TrainConfig& cfg, const MlpWeights* initial) {
    cfg.validate();
    if (scenes.empty()) throw invalid_argument("train: no scenes");
    for (std::size_t s = 0; s < scenes.size(); ++s) {
        if (scenes[s].views.empty())
            throw invalid_argument("train: scene " + std::to_string(s) + " has no views");
        if (scenes[s].features.n != scenes[s].scene.count)
            throw invalid_argument("train: scene " + std::to_string(s) + " features not precomputed");
        for (const CameraView& v : scenes[s].views)
            if (v.gt.empty()) throw invalid_argument("train: view without ground-truth image");
    }

    TrainResult result;
    result.weights = initial ? *initial : mlp_init(cfg.seed);
    mlp_validate(result.weights);

    AdamState adam = adam_init(result.weights);
    Rng sampler(cfg.seed, RngStream::train_sampler);
    result.log.reserve(static_cast<std::size_t>(cfg.iterations));

    for (std::int64_t iter = 0; iter < cfg.iterations; ++iter) {
        std::size_t si = static_cast<std::size_t>(sampler.uniform_index(scenes.size()));
        const TrainScene& ts = scenes[si];
        std::size_t vi = static_cast<std::size_t>(sampler.uniform_index(ts.views.size()));
        const CameraView& view = ts.views[vi];

        MlpForwardCache cache;
        std::vector<float> scores = mlp_forward(ts.features, result.weights, &cache);

        RenderOutput out = render(view, ts.scene, &scores, cfg.background);
        Image dimg;
        double l_render = rendering_loss(out.image, view.gt, cfg.lambda_dssim, &dimg);
        std::vector<double> ds_render = render_backward(out, dimg, cfg.covariance_path);

        std::vector<double> ds_prune;
        double l_prune = pruning_loss(scores, cfg.score_target, &ds_prune);
        std::vector<double> ds_entropy;
        double l_entropy = entropy_loss(scores, cfg.bins, cfg.sigma_hist, &ds_entropy);

        double total = total_loss(cfg.weights, l_render, l_prune, l_entropy);
        double mean_score = 0.0;
        for (float s : scores) mean_score += s;
        mean_score /= static_cast<double>(scores.size());

        if (!std::isfinite(total)) {
            std::ostringstream dump;
            dump << "train: non-finite loss at iteration " << iter << " (scene " << si << ", view " << vi
                 << "): render=" << l_render << " prune=" << l_prune << " entropy=" << l_entropy
                 << " mean_score=" << mean_score;
            throw numeric_error(dump.str());
        }

        std::vector<double> dscore(scores.size());
        for (std::size_t i = 0; i < scores.size(); ++i) {
            dscore[i] = cfg.weights.render * ds_render[i] + cfg.weights.prune * ds_prune[i] +
                        cfg.weights.entropy * ds_entropy[i];
        }
        MlpGrads grads = mlp_backward(result.weights, cache, dscore);
        double lr = iter >= cfg.lr_decay_iteration ? cfg.lr / cfg.lr_decay_factor : cfg.lr;
        adam_step(result.weights, grads, adam, lr);

        result.log.push_back(TrainLogRow{iter, l_render, l_prune, l_entropy, total, mean_score});
    }
    return result;
}

std::string train_log_to_csv(const std::vector<TrainLogRow>& log) {
    std::string out = "iter,render_loss,prune_loss,entropy_loss,total,mean_score\n";
    char buf[200];
    for (const TrainLogRow& row : log) {
        std::snprintf(buf, sizeof(buf), "%lld,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                      static_cast<long long>(row.iter), row.render_loss, row.prune_loss, row.entropy_loss,
                      row.total, row.mean_score);
        out += buf;
    }
    return out;
}

void save_train_log(const std::vector<TrainLogRow>& log, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw io_error("cannot open for writing: " + path);
    f << train_log_to_csv(log);
    if (!f) throw io_error("write failed: " + path);
}

}  // namespace rap
