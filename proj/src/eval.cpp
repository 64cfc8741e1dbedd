#include "rap/eval.hpp"

#include <algorithm>
#include <cmath>

#include "rap/features.hpp"
#include "rap/losses.hpp"
#include "rap/metrics.hpp"
#include "rap/parallel.hpp"
#include "rap/ply_io.hpp"
#include "rap/renderer.hpp"
#include "rap/rng.hpp"

namespace rap {

VisibilityResult visibility_score(const SplatScene& scene, const std::vector<CameraView>& views) {
    if (views.empty()) throw invalid_argument("visibility_score: need at least one view");
    std::size_t n = scene.count;
    VisibilityResult result;
    result.hit_counts.assign(n, 0);
    result.raw.assign(n, 0.0);
    result.scores.assign(n, 0.0f);
    if (n == 0) {
        result.all_zero = true;
        return result;
    }

    for (const CameraView& view : views) {
        ProjectOutput proj = project(view, scene);
        parallel_for(n, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) {
                const ProjectedSplat& sp = proj.splats[i];
                if (!sp.valid || sp.x0 > sp.x1 || sp.y0 > sp.y1) continue;
                std::int64_t hits = 0;
                for (int r = sp.y0; r <= sp.y1; ++r) {
                    for (int c = sp.x0; c <= sp.x1; ++c) {
                        double dx = c + 0.5 - sp.mean.x, dy = r + 0.5 - sp.mean.y;
                        double m2 = sp.conic00 * dx * dx + 2.0 * sp.conic01 * dx * dy +
                                    sp.conic11 * dy * dy;
                        double alpha = std::min(kAlphaCap, sp.opacity_eff * std::exp(-0.5 * m2));
                        if (alpha >= kAlphaSkip) ++hits;
                    }
                }
                result.hit_counts[i] += hits;
            }
        });
    }

    // Volume attenuation relative to the 90th-percentile volume.
    ActivatedSplats act = activate(scene);
    std::vector<double> volume(n);
    for (std::size_t i = 0; i < n; ++i)
        volume[i] = static_cast<double>(act.scale[3 * i]) * act.scale[3 * i + 1] * act.scale[3 * i + 2];
    std::vector<double> sorted(volume);
    std::sort(sorted.begin(), sorted.end());
    double p90 = percentile_sorted(sorted, 90.0);

    for (std::size_t i = 0; i < n; ++i) {
        double gamma = p90 > 0.0 ? std::pow(std::min(volume[i], p90) / p90, 0.1) : 1.0;
        result.raw[i] = static_cast<double>(result.hit_counts[i]) * act.opacity[i] * gamma;
    }
    double lo = *std::min_element(result.raw.begin(), result.raw.end());
    double hi = *std::max_element(result.raw.begin(), result.raw.end());
    if (hi > lo) {
        for (std::size_t i = 0; i < n; ++i)
            result.scores[i] = static_cast<float>((result.raw[i] - lo) / (hi - lo));
    } else {
        float v = hi > 0.0 ? 1.0f : 0.0f;
        std::fill(result.scores.begin(), result.scores.end(), v);
        result.all_zero = hi <= 0.0;
    }
    return result;
}

RdCurve retention_curve(const SplatScene& scene, const std::vector<float>& scores,
                        const std::vector<CameraView>& eval_views, const std::vector<double>& ratios,
                        RateMode rate_mode, const Vec3d& background) {
    if (scores.size() != scene.count) throw invalid_argument("retention_curve: score length mismatch");
    if (eval_views.empty()) throw invalid_argument("retention_curve: need at least one view");
    for (const CameraView& v : eval_views)
        if (v.gt.empty()) throw invalid_argument("retention_curve: view without ground-truth image");
    if (ratios.empty()) throw invalid_argument("retention_curve: empty ratio list");
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        if (!(ratios[i] > 0.0 && ratios[i] <= 1.0))
            throw invalid_argument("retention_curve: ratios must lie in (0, 1]");
        if (i > 0 && !(ratios[i] > ratios[i - 1]))
            throw invalid_argument("retention_curve: ratios must be ascending");
    }

    RdCurve curve;
    for (double ratio : ratios) {
        SplatScene pruned = prune_by_ratio(scene, scores, ratio);
        double rate = rate_mode == RateMode::bytes ? static_cast<double>(serialize_ply(pruned).size())
                                                   : static_cast<double>(pruned.count);
        double sum = 0.0;
        for (const CameraView& v : eval_views) {
            RenderOutput out = render(v, pruned, nullptr, background);
            sum += psnr(out.image, v.gt);
        }
        RdPoint p{rate, sum / static_cast<double>(eval_views.size())};
        // Tiny scenes can map adjacent ratios to the same kept count.
        if (!curve.points.empty() && !(p.rate > curve.points.back().rate)) continue;
        curve.points.push_back(p);
    }
    validate_curve(curve, "retention_curve");
    return curve;
}

namespace {

struct ArrayAdam {
    std::vector<double> m, v;
    std::int64_t t = 0;

    explicit ArrayAdam(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

    void step(std::vector<float>& p, const std::vector<double>& g, double lr) {
        t += 1;
        double bc1 = 1.0 - std::pow(0.9, static_cast<double>(t));
        double bc2 = 1.0 - std::pow(0.999, static_cast<double>(t));
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = 0.9 * m[i] + 0.1 * g[i];
            v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
            p[i] = static_cast<float>(static_cast<double>(p[i]) -
                                      lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + 1e-8));
        }
    }

    void keep_rows(const std::vector<bool>& mask, int width) {
        std::size_t j = 0;
        for (std::size_t i = 0; i < mask.size(); ++i) {
            if (!mask[i]) continue;
            for (int k = 0; k < width; ++k) {
                m[j * static_cast<std::size_t>(width) + static_cast<std::size_t>(k)] =
                    m[i * static_cast<std::size_t>(width) + static_cast<std::size_t>(k)];
                v[j * static_cast<std::size_t>(width) + static_cast<std::size_t>(k)] =
                    v[i * static_cast<std::size_t>(width) + static_cast<std::size_t>(k)];
            }
            ++j;
        }
        m.resize(j * static_cast<std::size_t>(width));
        v.resize(j * static_cast<std::size_t>(width));
    }
};

std::vector<float> fit_scores(const SplatScene& scene, const FitConfig& cfg) {
    if (cfg.score_method == "opacity") return opacity_score(scene);
    if (cfg.score_method == "rap") {
        if (!cfg.rap_weights) throw invalid_argument("fit: rap pruning needs weights");
        return score_scene(scene, *cfg.rap_weights, cfg.features).scores;
    }
    throw invalid_argument("fit: unknown score method '" + cfg.score_method + "'");
}

}  // namespace

FitResult fit_scene(const SplatScene& initial, const std::vector<CameraView>& views, const FitConfig& cfg) {
    if (views.empty()) throw invalid_argument("fit: need at least one view");
    for (const CameraView& v : views)
        if (v.gt.empty()) throw invalid_argument("fit: view without ground-truth image");
    if (cfg.iterations < 0) throw invalid_argument("fit: negative iteration count");

    FitResult result;
    result.scene = initial;
    validate_scene(result.scene, "fit");

    ArrayAdam adam_pos(result.scene.positions.size());
    ArrayAdam adam_op(result.scene.opacity_raw.size());
    ArrayAdam adam_scale(result.scene.scale_raw.size());
    ArrayAdam adam_dc(result.scene.sh_dc.size());

    Rng sampler(cfg.seed, RngStream::fit_sampler);
    for (std::int64_t iter = 1; iter <= cfg.iterations; ++iter) {
        const CameraView& view = views[sampler.uniform_index(views.size())];
        RenderOutput out = render(view, result.scene, nullptr, cfg.background);
        Image dimg;
        double loss = rendering_loss(out.image, view.gt, cfg.lambda_dssim, &dimg);
        if (!std::isfinite(loss)) throw numeric_error("fit: non-finite loss at iteration " + std::to_string(iter));
        ParamGrads grads = render_param_backward(out, dimg);

        adam_pos.step(result.scene.positions, grads.position, cfg.lr_position);
        adam_op.step(result.scene.opacity_raw, grads.opacity_raw, cfg.lr_opacity);
        adam_scale.step(result.scene.scale_raw, grads.scale_raw, cfg.lr_scale);
        adam_dc.step(result.scene.sh_dc, grads.sh_dc, cfg.lr_color);

        if (cfg.score_method != "none") {
            if (auto directive = in_loop_schedule(iter, cfg.prune_period, cfg.drop_fraction)) {
                std::vector<float> scores = fit_scores(result.scene, cfg);
                std::vector<bool> mask = keep_mask_by_ratio(scores, 1.0 - directive->drop_fraction);
                result.scene = select(result.scene, mask);
                adam_pos.keep_rows(mask, 3);
                adam_op.keep_rows(mask, 1);
                adam_scale.keep_rows(mask, 3);
                adam_dc.keep_rows(mask, 3);
            }
        }
        result.log.push_back(FitLogRow{iter, loss, result.scene.count});
    }
    return result;
}

}  // namespace rap
