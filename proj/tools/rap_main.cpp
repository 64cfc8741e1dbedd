// rap: feature extraction, importance scoring, pruning and evaluation for
// Gaussian-splat scenes.

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rap/camera_io.hpp"
#include "rap/eval.hpp"
#include "rap/features.hpp"
#include "rap/image_io.hpp"
#include "rap/mlp.hpp"
#include "rap/parallel.hpp"
#include "rap/ply_io.hpp"
#include "rap/provenance.hpp"
#include "rap/renderer.hpp"
#include "rap/scoring.hpp"
#include "rap/sha256.hpp"
#include "rap/synthgen.hpp"
#include "rap/training.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
    int threads = 0;
    std::uint64_t seed = 0;
};

void add_common(CLI::App* sub, CommonOpts& c) {
    sub->add_option("--threads", c.threads, "Worker threads (0 = all cores; results are identical)");
    sub->add_option("--seed", c.seed, "Master seed; subsystem streams are derived from it");
    sub->set_config("--config", "", "Plain-text `key = value` configuration file");
    sub->allow_config_extras(CLI::config_extras_mode::error);
}

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::vector<double> parse_ratios(const std::string& text) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        double lo, hi, step;
        if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 || step <= 0.0)
            throw rap::invalid_argument("bad --ratios range '" + text + "' (want lo:hi:step)");
        for (double r = lo; r <= hi + 1e-9; r += step) out.push_back(std::min(r, 1.0));
    } else {
        std::istringstream ss(text);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok.empty()) continue;
            out.push_back(std::stod(tok));
        }
    }
    if (out.empty()) throw rap::invalid_argument("empty --ratios list");
    return out;
}

rap::Vec3d parse_rgb(const std::string& text) {
    rap::Vec3d c;
    if (std::sscanf(text.c_str(), "%lf,%lf,%lf", &c.x, &c.y, &c.z) != 3)
        throw rap::invalid_argument("bad color '" + text + "' (want r,g,b)");
    return c;
}

void write_histogram_csv(const std::vector<std::int64_t>& counts, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw rap::io_error("cannot open for writing: " + path);
    f << "bin,center,count\n";
    std::size_t bins = counts.size();
    for (std::size_t k = 0; k < bins; ++k)
        f << k << "," << fmt((static_cast<double>(k) + 0.5) / static_cast<double>(bins)) << ","
          << counts[k] << "\n";
    if (!f) throw rap::io_error("write failed: " + path);
}

// ---------------------------------------------------------------- features

struct FeaturesCmd {
    CommonOpts common;
    std::string scene_path, out_path;
    int k = 128;
    int m = 64;
    double clip_lo = 1.0, clip_hi = 99.0;

    void run() const {
        auto t0 = std::chrono::steady_clock::now();
        rap::SplatScene scene = rap::load_ply(scene_path);
        rap::FeatureParams params{k, m, clip_lo, clip_hi, common.seed};
        bool degenerate = false;
        rap::FeatureMatrix features = rap::compute_features(scene, params, &degenerate);
        rap::save_features(features, out_path);

        rap::Provenance p;
        p.command = "features";
        p.config = {{"k", std::to_string(k)},          {"m", std::to_string(m)},
                    {"clip_lo", fmt(clip_lo)},         {"clip_hi", fmt(clip_hi)},
                    {"seed", std::to_string(common.seed)}, {"threads", std::to_string(common.threads)}};
        p.input_hashes = {{"scene", rap::sha256_file_hex(scene_path)}};
        if (degenerate) p.extra["degenerate_neighbors"] = "true";
        p.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rap::write_provenance(p, out_path);
        std::cout << "features: " << features.n << " rows -> " << out_path << "\n";
    }
};

// ------------------------------------------------------------------- score

struct ScoreCmd {
    CommonOpts common;
    std::string scene_path, out_path, weights_path, views_path, hist_path;
    std::string method = "rap";
    int k = 128, m = 64;
    double clip_lo = 1.0, clip_hi = 99.0;
    int hist_bins = 250;

    void run() const {
        auto t0 = std::chrono::steady_clock::now();
        rap::SplatScene scene = rap::load_ply(scene_path);
        rap::ScoreReport report;
        rap::Provenance p;
        p.command = "score";
        p.input_hashes["scene"] = rap::sha256_file_hex(scene_path);

        if (method == "rap") {
            rap::MlpWeights w = rap::load_weights(weights_path);
            rap::FeatureParams params{k, m, clip_lo, clip_hi, common.seed};
            report = rap::score_scene(scene, w, params, hist_bins);
            report.weights_sha256 = rap::sha256_file_hex(weights_path);
            p.input_hashes["weights"] = report.weights_sha256;
        } else if (method == "opacity") {
            report.method = "opacity";
            report.scores = rap::opacity_score(scene);
        } else if (method == "visibility") {
            std::vector<rap::CameraView> views = rap::load_cameras(views_path, "", false);
            rap::VisibilityResult vis = rap::visibility_score(scene, views);
            report.method = "visibility";
            report.scores = vis.scores;
            if (vis.all_zero) p.extra["warning"] = "no visible primitive; scores are all zero";
            p.input_hashes["views"] = rap::sha256_file_hex(views_path);
        } else {
            throw rap::invalid_argument("unknown method '" + method + "'");
        }
        if (report.histogram.empty()) report.histogram = rap::score_histogram(report.scores, hist_bins);
        report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        rap::save_scores(report.scores, out_path);
        std::string hist = hist_path.empty() ? out_path + ".hist.csv" : hist_path;
        write_histogram_csv(report.histogram, hist);

        p.config = {{"method", method},
                    {"k", std::to_string(k)},
                    {"m", std::to_string(m)},
                    {"clip_lo", fmt(clip_lo)},
                    {"clip_hi", fmt(clip_hi)},
                    {"hist_bins", std::to_string(hist_bins)},
                    {"seed", std::to_string(common.seed)},
                    {"threads", std::to_string(common.threads)}};
        p.extra["method"] = report.method;
        p.extra["seconds"] = fmt(report.seconds);
        if (report.degenerate_neighbors) p.extra["degenerate_neighbors"] = "true";
        p.seconds = report.seconds;
        rap::write_provenance(p, out_path);
        std::cout << "score: " << report.scores.size() << " primitives in " << fmt(report.seconds)
                  << " s -> " << out_path << "\n";
    }
};

// ------------------------------------------------------------------- prune

struct PruneCmd {
    CommonOpts common;
    std::string scene_path, scores_path, out_path;
    double retention_raw = 0.0, threshold_raw = 0.0;
    std::optional<double> retention;
    std::optional<double> threshold;

    void run() const {
        rap::SplatScene scene = rap::load_ply(scene_path);
        std::vector<float> scores = rap::load_scores(scores_path);
        if (scores.size() != scene.count)
            throw rap::invalid_argument("score count " + std::to_string(scores.size()) +
                                        " does not match scene size " + std::to_string(scene.count));
        rap::SplatScene pruned = retention ? rap::prune_by_ratio(scene, scores, *retention)
                                           : rap::prune_by_threshold(scene, scores, *threshold);
        rap::save_ply(pruned, out_path);

        rap::Provenance p;
        p.command = "prune";
        p.config = {{retention ? "retention" : "threshold", fmt(retention ? *retention : *threshold)}};
        p.input_hashes = {{"scene", rap::sha256_file_hex(scene_path)},
                          {"scores", rap::sha256_file_hex(scores_path)}};
        if (pruned.count == 0) p.extra["warning"] = "pruned scene is empty";
        rap::write_provenance(p, out_path);
        std::cout << "prune: kept " << pruned.count << " / " << scene.count << " -> " << out_path << "\n";
        if (pruned.count == 0) std::cerr << "warning: pruned scene is empty\n";
    }
};

// ------------------------------------------------------------------- train

struct TrainCmd {
    CommonOpts common;
    std::string manifest_path, weights_out, log_out;
    rap::TrainConfig cfg;

    void run() {
        cfg.seed = common.seed;
        cfg.features.seed = common.seed;
        std::vector<rap::ManifestEntry> entries = rap::load_manifest(manifest_path);
        std::vector<rap::TrainScene> scenes;
        for (const auto& e : entries) {
            rap::SplatScene scene = rap::load_ply(e.ply_path);
            std::vector<rap::CameraView> views = rap::load_cameras(e.cameras_path, e.image_dir, true);
            scenes.push_back(rap::make_train_scene(std::move(scene), std::move(views), cfg));
        }
        rap::TrainResult result = rap::train(scenes, cfg);
        rap::save_weights(result.weights, weights_out);
        if (!log_out.empty()) rap::save_train_log(result.log, log_out);

        rap::Provenance p;
        p.command = "train";
        p.config = {{"iterations", std::to_string(cfg.iterations)},
                    {"lambda_dssim", fmt(cfg.lambda_dssim)},
                    {"lambda_render", fmt(cfg.weights.render)},
                    {"lambda_prune", fmt(cfg.weights.prune)},
                    {"lambda_entropy", fmt(cfg.weights.entropy)},
                    {"score_target", fmt(cfg.score_target)},
                    {"bins", std::to_string(cfg.bins)},
                    {"sigma_hist", fmt(cfg.sigma_hist)},
                    {"lr", fmt(cfg.lr)},
                    {"k", std::to_string(cfg.features.k)},
                    {"m", std::to_string(cfg.features.directions)},
                    {"clip_lo", fmt(cfg.features.clip_lo)},
                    {"clip_hi", fmt(cfg.features.clip_hi)},
                    {"seed", std::to_string(common.seed)},
                    {"threads", std::to_string(common.threads)}};
        p.input_hashes["manifest"] = rap::sha256_file_hex(manifest_path);
        for (std::size_t i = 0; i < entries.size(); ++i)
            p.input_hashes["scene" + std::to_string(i)] = rap::sha256_file_hex(entries[i].ply_path);
        rap::write_provenance(p, weights_out);
        double final_total = result.log.empty() ? 0.0 : result.log.back().total;
        std::cout << "train: " << cfg.iterations << " iterations, final total loss " << fmt(final_total)
                  << " -> " << weights_out << "\n";
    }
};

// -------------------------------------------------------------------- eval

struct EvalCmd {
    CommonOpts common;
    std::string scene_path, scores_path, views_path, image_dir, out_curve;
    std::string ratios_text = "0.05:0.95:0.05";
    std::string rate_mode = "bytes";
    std::string background = "0,0,0";

    void run() const {
        rap::SplatScene scene = rap::load_ply(scene_path);
        std::vector<float> scores = rap::load_scores(scores_path);
        std::vector<rap::CameraView> views = rap::load_cameras(views_path, image_dir, true);
        std::vector<double> ratios = parse_ratios(ratios_text);
        rap::RateMode mode;
        if (rate_mode == "bytes")
            mode = rap::RateMode::bytes;
        else if (rate_mode == "count")
            mode = rap::RateMode::count;
        else
            throw rap::invalid_argument("unknown rate mode '" + rate_mode + "'");
        rap::RdCurve curve =
            rap::retention_curve(scene, scores, views, ratios, mode, parse_rgb(background));
        rap::save_curve_csv(curve, out_curve);

        rap::Provenance p;
        p.command = "eval";
        p.config = {{"ratios", ratios_text}, {"rate_mode", rate_mode}, {"background", background}};
        p.input_hashes = {{"scene", rap::sha256_file_hex(scene_path)},
                          {"scores", rap::sha256_file_hex(scores_path)},
                          {"views", rap::sha256_file_hex(views_path)}};
        rap::write_provenance(p, out_curve);
        std::cout << "eval: " << curve.points.size() << " points -> " << out_curve << "\n";
    }
};

// ------------------------------------------------------------------ bdrate

struct BdrateCmd {
    std::string test_path, anchor_path;

    void run() const {
        rap::RdCurve test = rap::load_curve_csv(test_path);
        rap::RdCurve anchor = rap::load_curve_csv(anchor_path);
        double bd = rap::bd_rate(test, anchor);
        std::printf("%.2f\n", bd);
    }
};

// ------------------------------------------------------------------ render

struct RenderCmd {
    CommonOpts common;
    std::string scene_path, views_path, out_dir, scores_path;
    std::string background = "0,0,0";
    int view_index = -1;
    bool float_out = false;

    void run() const {
        rap::SplatScene scene = rap::load_ply(scene_path);
        std::vector<rap::CameraView> views = rap::load_cameras(views_path, "", false);
        std::vector<float> scores;
        if (!scores_path.empty()) {
            scores = rap::load_scores(scores_path);
            if (scores.size() != scene.count) throw rap::invalid_argument("score count mismatch");
        }
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw rap::io_error("cannot create output directory: " + out_dir);

        rap::Vec3d bg = parse_rgb(background);
        for (std::size_t i = 0; i < views.size(); ++i) {
            if (view_index >= 0 && static_cast<std::size_t>(view_index) != i) continue;
            rap::RenderOutput out =
                rap::render(views[i], scene, scores.empty() ? nullptr : &scores, bg);
            char name[64];
            std::snprintf(name, sizeof(name), "render_%03zu", i);
            rap::save_png(out.image, (fs::path(out_dir) / (std::string(name) + ".png")).string());
            if (float_out)
                rap::save_rapi(out.image, (fs::path(out_dir) / (std::string(name) + ".rapi")).string());
        }
        rap::Provenance p;
        p.command = "render";
        p.config = {{"background", background}, {"float_out", float_out ? "true" : "false"}};
        p.input_hashes = {{"scene", rap::sha256_file_hex(scene_path)},
                          {"views", rap::sha256_file_hex(views_path)}};
        if (!scores_path.empty()) p.input_hashes["scores"] = rap::sha256_file_hex(scores_path);
        rap::write_provenance(p, (fs::path(out_dir) / "renders").string());
        std::cout << "render: wrote images to " << out_dir << "\n";
    }
};

// ------------------------------------------------------------------- synth

struct SynthCmd {
    CommonOpts common;
    std::string out_dir;
    rap::SynthSpec spec;

    void run() {
        spec.seed = common.seed;
        rap::SynthScene synth = rap::generate_synth(spec);
        rap::write_synth(synth, out_dir);
        rap::Provenance p;
        p.command = "synth";
        p.config = {{"informative", std::to_string(spec.informative)},
                    {"clones", std::to_string(spec.clones)},
                    {"floaters", std::to_string(spec.floaters)},
                    {"ghosts", std::to_string(spec.ghosts)},
                    {"zero_sh", std::to_string(spec.zero_sh)},
                    {"cameras", std::to_string(spec.cameras)},
                    {"image_size", std::to_string(spec.image_size)},
                    {"seed", std::to_string(spec.seed)}};
        rap::write_provenance(p, (fs::path(out_dir) / "scene.ply").string());
        std::cout << "synth: " << synth.scene.count << " primitives, " << synth.views.size()
                  << " views -> " << out_dir << "\n";
    }
};

// --------------------------------------------------------------------- fit

struct FitCmd {
    CommonOpts common;
    std::string scene_path, views_path, image_dir, out_path, log_out, weights_path;
    rap::FitConfig cfg;

    void run() {
        cfg.seed = common.seed;
        cfg.features.seed = common.seed;
        rap::SplatScene scene = rap::load_ply(scene_path);
        std::vector<rap::CameraView> views = rap::load_cameras(views_path, image_dir, true);
        rap::MlpWeights weights;
        if (cfg.score_method == "rap") {
            weights = rap::load_weights(weights_path);
            cfg.rap_weights = &weights;
        }
        rap::FitResult result = rap::fit_scene(scene, views, cfg);
        rap::save_ply(result.scene, out_path);
        if (!log_out.empty()) {
            std::ofstream f(log_out, std::ios::trunc);
            if (!f) throw rap::io_error("cannot open for writing: " + log_out);
            f << "iter,loss,primitives\n";
            for (const auto& row : result.log)
                f << row.iter << "," << fmt(row.loss) << "," << row.primitives << "\n";
        }
        rap::Provenance p;
        p.command = "fit";
        p.config = {{"iterations", std::to_string(cfg.iterations)},
                    {"prune_period", std::to_string(cfg.prune_period)},
                    {"drop_fraction", fmt(cfg.drop_fraction)},
                    {"method", cfg.score_method},
                    {"seed", std::to_string(common.seed)}};
        p.input_hashes = {{"scene", rap::sha256_file_hex(scene_path)},
                          {"views", rap::sha256_file_hex(views_path)}};
        rap::write_provenance(p, out_path);
        std::cout << "fit: " << result.scene.count << " primitives after " << cfg.iterations
                  << " iterations -> " << out_path << "\n";
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rap: attribute-guided importance scoring and pruning for Gaussian-splat scenes"};
    app.require_subcommand(0, 1);
    bool want_version = false, json_version = false;
    app.add_flag("--version", want_version, "Print version and exit");
    app.add_flag("--json", json_version, "Print version info as JSON (with --version)");

    FeaturesCmd features_cmd;
    ScoreCmd score_cmd;
    PruneCmd prune_cmd;
    TrainCmd train_cmd;
    EvalCmd eval_cmd;
    BdrateCmd bdrate_cmd;
    RenderCmd render_cmd;
    SynthCmd synth_cmd;
    FitCmd fit_cmd;
    std::function<void()> action;
    const CommonOpts* common = nullptr;

    {
        auto* sub = app.add_subcommand("features", "Compute the normalized per-primitive feature matrix");
        sub->add_option("--scene", features_cmd.scene_path, "Input PLY scene")->required();
        sub->add_option("--out", features_cmd.out_path, "Output RAPF feature file")->required();
        sub->add_option("--k", features_cmd.k, "Nearest-neighbor count for local statistics");
        sub->add_option("--m", features_cmd.m, "Sampled directions for color anisotropy");
        sub->add_option("--clip-lo", features_cmd.clip_lo, "Lower clip percentile");
        sub->add_option("--clip-hi", features_cmd.clip_hi, "Upper clip percentile");
        add_common(sub, features_cmd.common);
        sub->callback([&] { action = [&] { features_cmd.run(); }; common = &features_cmd.common; });
    }
    {
        auto* sub = app.add_subcommand("score", "Score every primitive (rap | opacity | visibility)");
        sub->add_option("--scene", score_cmd.scene_path, "Input PLY scene")->required();
        sub->add_option("--out", score_cmd.out_path, "Output RAPS score file")->required();
        sub->add_option("--method", score_cmd.method, "rap | opacity | visibility");
        sub->add_option("--weights", score_cmd.weights_path, "Scorer weights JSON (rap)");
        sub->add_option("--views", score_cmd.views_path, "Camera JSON (visibility)");
        sub->add_option("--hist", score_cmd.hist_path, "Histogram CSV path (default <out>.hist.csv)");
        sub->add_option("--hist-bins", score_cmd.hist_bins, "Histogram bin count");
        sub->add_option("--k", score_cmd.k, "Nearest-neighbor count");
        sub->add_option("--m", score_cmd.m, "Anisotropy direction count");
        sub->add_option("--clip-lo", score_cmd.clip_lo, "Lower clip percentile");
        sub->add_option("--clip-hi", score_cmd.clip_hi, "Upper clip percentile");
        add_common(sub, score_cmd.common);
        sub->callback([&] {
            if (score_cmd.method == "rap" && score_cmd.weights_path.empty())
                throw CLI::ValidationError("score", "--method rap requires --weights");
            if (score_cmd.method == "visibility" && score_cmd.views_path.empty())
                throw CLI::ValidationError("score", "--method visibility requires --views");
            action = [&] { score_cmd.run(); };
            common = &score_cmd.common;
        });
    }
    {
        auto* sub = app.add_subcommand("prune", "Prune a scene by retention ratio or score threshold");
        sub->add_option("--scene", prune_cmd.scene_path, "Input PLY scene")->required();
        sub->add_option("--scores", prune_cmd.scores_path, "RAPS score file")->required();
        sub->add_option("--out", prune_cmd.out_path, "Output PLY")->required();
        auto* r = sub->add_option("--retention", prune_cmd.retention_raw,
                                  "Keep this fraction of top-scored primitives");
        auto* t = sub->add_option("--threshold", prune_cmd.threshold_raw,
                                  "Keep primitives with score >= threshold");
        add_common(sub, prune_cmd.common);
        sub->callback([&, r, t] {
            if ((r->count() > 0) == (t->count() > 0))
                throw CLI::ValidationError("prune", "exactly one of --retention / --threshold is required");
            if (r->count() > 0) prune_cmd.retention = prune_cmd.retention_raw;
            if (t->count() > 0) prune_cmd.threshold = prune_cmd.threshold_raw;
            action = [&] { prune_cmd.run(); };
            common = &prune_cmd.common;
        });
    }
    {
        auto* sub = app.add_subcommand("train", "Train the scorer on a scene roster");
        sub->add_option("--manifest", train_cmd.manifest_path, "Scene roster manifest")->required();
        sub->add_option("--out-weights", train_cmd.weights_out, "Output weights JSON")->required();
        sub->add_option("--log", train_cmd.log_out, "Training log CSV");
        sub->add_option("--iterations", train_cmd.cfg.iterations, "Training iterations");
        sub->add_option("--lambda-dssim", train_cmd.cfg.lambda_dssim, "D-SSIM weight inside the rendering loss");
        sub->add_option("--lambda-render", train_cmd.cfg.weights.render, "Rendering loss weight");
        sub->add_option("--lambda-prune", train_cmd.cfg.weights.prune, "Pruning-aware loss weight");
        sub->add_option("--lambda-entropy", train_cmd.cfg.weights.entropy, "Distribution loss weight");
        sub->add_option("--score-target", train_cmd.cfg.score_target, "Target mean score");
        sub->add_option("--bins", train_cmd.cfg.bins, "Soft-histogram bins");
        sub->add_option("--sigma-hist", train_cmd.cfg.sigma_hist, "Soft-histogram kernel width");
        sub->add_option("--lr", train_cmd.cfg.lr, "Adam learning rate");
        sub->add_option("--k", train_cmd.cfg.features.k, "Nearest-neighbor count");
        sub->add_option("--m", train_cmd.cfg.features.directions, "Anisotropy direction count");
        sub->add_option("--clip-lo", train_cmd.cfg.features.clip_lo, "Lower clip percentile");
        sub->add_option("--clip-hi", train_cmd.cfg.features.clip_hi, "Upper clip percentile");
        add_common(sub, train_cmd.common);
        sub->callback([&] { action = [&] { train_cmd.run(); }; common = &train_cmd.common; });
    }
    {
        auto* sub = app.add_subcommand("eval", "Retention-ratio vs PSNR curve for a scored scene");
        sub->add_option("--scene", eval_cmd.scene_path, "Input PLY scene")->required();
        sub->add_option("--scores", eval_cmd.scores_path, "RAPS score file")->required();
        sub->add_option("--views", eval_cmd.views_path, "Camera JSON with ground-truth images")->required();
        sub->add_option("--image-dir", eval_cmd.image_dir, "Image directory (default: beside the JSON)");
        sub->add_option("--ratios", eval_cmd.ratios_text, "Comma list or lo:hi:step (default 0.05:0.95:0.05)");
        sub->add_option("--rate-mode", eval_cmd.rate_mode, "bytes | count");
        sub->add_option("--background", eval_cmd.background, "Background r,g,b");
        sub->add_option("--out-curve", eval_cmd.out_curve, "Output curve CSV")->required();
        add_common(sub, eval_cmd.common);
        sub->callback([&] { action = [&] { eval_cmd.run(); }; common = &eval_cmd.common; });
    }
    {
        auto* sub = app.add_subcommand("bdrate", "Bjontegaard delta-rate between two curve CSVs");
        sub->add_option("--test", bdrate_cmd.test_path, "Test curve CSV")->required();
        sub->add_option("--anchor", bdrate_cmd.anchor_path, "Anchor curve CSV")->required();
        sub->callback([&] { action = [&] { bdrate_cmd.run(); }; });
    }
    {
        auto* sub = app.add_subcommand("render", "Render views of a scene (optionally score-reweighted)");
        sub->add_option("--scene", render_cmd.scene_path, "Input PLY scene")->required();
        sub->add_option("--views", render_cmd.views_path, "Camera JSON")->required();
        sub->add_option("--out-dir", render_cmd.out_dir, "Output directory")->required();
        sub->add_option("--scores", render_cmd.scores_path, "Optional RAPS scores for soft reweighting");
        sub->add_option("--view-index", render_cmd.view_index, "Render a single view");
        sub->add_option("--background", render_cmd.background, "Background r,g,b");
        sub->add_flag("--float-out", render_cmd.float_out, "Also write raw float images");
        add_common(sub, render_cmd.common);
        sub->callback([&] { action = [&] { render_cmd.run(); }; common = &render_cmd.common; });
    }
    {
        auto* sub = app.add_subcommand("synth", "Generate a synthetic scene with planted redundancy");
        sub->add_option("--out-dir", synth_cmd.out_dir, "Output directory")->required();
        sub->add_option("--informative", synth_cmd.spec.informative, "Surface primitives");
        sub->add_option("--clones", synth_cmd.spec.clones, "Duplicate clones");
        sub->add_option("--floaters", synth_cmd.spec.floaters, "Isolated outliers");
        sub->add_option("--ghosts", synth_cmd.spec.ghosts, "Low-opacity primitives");
        sub->add_option("--zero-sh", synth_cmd.spec.zero_sh, "Zero-SH blobs");
        sub->add_option("--cameras", synth_cmd.spec.cameras, "Ring camera count");
        sub->add_option("--image-size", synth_cmd.spec.image_size, "Image width/height");
        sub->add_option("--ring-radius", synth_cmd.spec.ring_radius, "Camera ring radius");
        sub->add_option("--ring-height", synth_cmd.spec.ring_height, "Camera ring height");
        add_common(sub, synth_cmd.common);
        sub->callback([&] { action = [&] { synth_cmd.run(); }; common = &synth_cmd.common; });
    }
    {
        auto* sub = app.add_subcommand("fit", "Fixed-topology fit with scheduled in-loop pruning");
        sub->add_option("--scene", fit_cmd.scene_path, "Input PLY scene")->required();
        sub->add_option("--views", fit_cmd.views_path, "Camera JSON with ground-truth images")->required();
        sub->add_option("--image-dir", fit_cmd.image_dir, "Image directory");
        sub->add_option("--out", fit_cmd.out_path, "Output PLY")->required();
        sub->add_option("--log", fit_cmd.log_out, "Fit log CSV");
        sub->add_option("--iterations", fit_cmd.cfg.iterations, "Fit iterations");
        sub->add_option("--method", fit_cmd.cfg.score_method, "Prune scorer: opacity | rap | none");
        sub->add_option("--weights", fit_cmd.weights_path, "Scorer weights JSON (rap)");
        sub->add_option("--prune-period", fit_cmd.cfg.prune_period, "Iterations between prunes");
        sub->add_option("--drop-fraction", fit_cmd.cfg.drop_fraction, "Fraction pruned per event");
        add_common(sub, fit_cmd.common);
        sub->callback([&] {
            if (fit_cmd.cfg.score_method == "rap" && fit_cmd.weights_path.empty())
                throw CLI::ValidationError("fit", "--method rap requires --weights");
            action = [&] { fit_cmd.run(); };
            common = &fit_cmd.common;
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const rap::io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const rap::numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const rap::eval_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    if (want_version) {
        if (json_version) {
            nlohmann::json doc{{"name", "rap"}, {"version", rap::kVersion}};
            std::cout << doc.dump() << "\n";
        } else {
            std::cout << "rap " << rap::kVersion << "\n";
        }
        return 0;
    }
    if (!action) {
        std::cerr << app.help();
        return 2;
    }

    try {
        if (common) rap::set_threads(common->threads);
        action();
    } catch (const rap::io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const rap::format_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const rap::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const rap::numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const rap::eval_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
