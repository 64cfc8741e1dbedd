#include "rap/renderer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

#include "rap/parallel.hpp"
#include "rap/sh.hpp"

namespace rap {

namespace {

std::atomic<std::uint64_t> g_render_calls{0};

// alpha < 1/255 is guaranteed outside this Mahalanobis radius for any
// effective opacity < 1, so the per-splat bounding box is an exact filter.
const double kBoundRadius = std::sqrt(2.0 * std::log(255.0)) + 0.01;
const double kMaxM2 = 2.0 * std::log(255.0);  // skip the exp beyond this

struct PixelHit {
    const ProjectedSplat* splat;
    double alpha;
    double g;   // Gaussian falloff
    double t;   // transmittance before this splat
    double dx, dy;
};

// Splats whose bounding box covers row r, in draw order.
void row_splats(const RenderCache& cache, int r, std::vector<const ProjectedSplat*>& out) {
    out.clear();
    for (std::int32_t oi : cache.draw_order) {
        const ProjectedSplat& sp = cache.splats[static_cast<std::size_t>(oi)];
        if (r >= sp.y0 && r <= sp.y1) out.push_back(&sp);
    }
}

// Front-to-back compositing walk over one pixel; emit sees each contributor
// with the transmittance before it. Returns the final transmittance.
template <typename Fn>
double walk_pixel(const std::vector<const ProjectedSplat*>& row, int r, int c, Fn&& emit) {
    double px = c + 0.5, py = r + 0.5;
    double t = 1.0;
    for (const ProjectedSplat* sp : row) {
        if (c < sp->x0 || c > sp->x1) continue;
        double dx = px - sp->mean.x, dy = py - sp->mean.y;
        double m2 = sp->conic00 * dx * dx + 2.0 * sp->conic01 * dx * dy + sp->conic11 * dy * dy;
        if (!(m2 < kMaxM2)) continue;
        double g = std::exp(-0.5 * m2);
        double alpha = std::min(kAlphaCap, sp->opacity_eff * g);
        if (alpha < kAlphaSkip) continue;
        emit(*sp, alpha, g, t, dx, dy);
        t *= 1.0 - alpha;
    }
    return t;
}

}  // namespace

std::uint64_t renderer_invocations() { return g_render_calls.load(); }

ProjectOutput project(const CameraView& view, const SplatScene& scene, const std::vector<float>* scores) {
    g_render_calls.fetch_add(1, std::memory_order_relaxed);
    validate_view(view, "project");
    if (scores && scores->size() != scene.count)
        throw invalid_argument("project: score vector length mismatch");

    ActivatedSplats act = activate(scene);
    Mat3d w_rot = view.rotation();
    Vec3d w_trans = view.translation();
    Vec3d cam_center = view.camera_center();

    ProjectOutput out;
    out.splats.resize(scene.count);
    std::atomic<std::size_t> culled{0}, degenerate{0};

    parallel_for(scene.count, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            ProjectedSplat& sp = out.splats[i];
            sp.index = static_cast<std::int32_t>(i);
            Vec3d p = scene.position(i);
            Vec3d t = w_rot * p + w_trans;
            if (t.z <= kNearPlane) {
                culled.fetch_add(1, std::memory_order_relaxed);
                continue;
            }
            double s_mult = scores ? static_cast<double>((*scores)[i]) : 1.0;
            sp.score = s_mult;
            sp.base_opacity = act.opacity[i];
            sp.opacity_eff = sp.base_opacity * s_mult;
            sp.depth = t.z;

            double inv_z = 1.0 / t.z;
            sp.mean.x = view.fx * t.x * inv_z + view.cx;
            sp.mean.y = view.fy * t.y * inv_z + view.cy;

            // Perspective Jacobian at the primitive center.
            double j00 = view.fx * inv_z, j02 = -view.fx * t.x * inv_z * inv_z;
            double j11 = view.fy * inv_z, j12 = -view.fy * t.y * inv_z * inv_z;
            for (int col = 0; col < 3; ++col) {
                sp.jw[col] = j00 * w_rot(0, col) + j02 * w_rot(2, col);
                sp.jw[3 + col] = j11 * w_rot(1, col) + j12 * w_rot(2, col);
            }
            const float* q = &act.quat[4 * i];
            Mat3d rot = quat_to_mat(q[0], q[1], q[2], q[3]);
            for (int col = 0; col < 3; ++col) {
                sp.m0[col] = sp.jw[0] * rot(0, col) + sp.jw[1] * rot(1, col) + sp.jw[2] * rot(2, col);
                sp.m0[3 + col] = sp.jw[3] * rot(0, col) + sp.jw[4] * rot(1, col) + sp.jw[5] * rot(2, col);
            }
            for (int k = 0; k < 3; ++k) sp.s_act[k] = act.scale[3 * i + k];

            // Score-free 2D covariance B = sum_k (s_k m_k)(s_k m_k)^T; the
            // reweighted covariance is S^2 * B + dilation.
            double b00 = 0, b01 = 0, b11 = 0;
            for (int k = 0; k < 3; ++k) {
                double ux = sp.s_act[k] * sp.m0[k];
                double uy = sp.s_act[k] * sp.m0[3 + k];
                b00 += ux * ux;
                b01 += ux * uy;
                b11 += uy * uy;
            }
            sp.base00 = b00;
            sp.base01 = b01;
            sp.base11 = b11;
            double ss = s_mult * s_mult;
            sp.cov00 = ss * b00 + kCovDilation;
            sp.cov01 = ss * b01;
            sp.cov11 = ss * b11 + kCovDilation;
            double det = sp.cov00 * sp.cov11 - sp.cov01 * sp.cov01;
            if (!(det > 1e-12) || !std::isfinite(det)) {
                degenerate.fetch_add(1, std::memory_order_relaxed);
                continue;
            }
            double inv_det = 1.0 / det;
            sp.conic00 = sp.cov11 * inv_det;
            sp.conic01 = -sp.cov01 * inv_det;
            sp.conic11 = sp.cov00 * inv_det;

            // View-dependent color from the camera-to-center direction.
            Vec3d dir = normalized(p - cam_center);
            double rgb[3];
            for (int ch = 0; ch < 3; ++ch) {
                rgb[ch] = sh_eval_channel(scene.sh_dc[3 * i + ch], &scene.sh_rest[45 * i + 15 * ch], dir);
                sp.color_clamped[ch] = rgb[ch] < 0.0 || rgb[ch] > 1.0;
                rgb[ch] = std::min(1.0, std::max(0.0, rgb[ch]));
            }
            sp.color = {rgb[0], rgb[1], rgb[2]};

            // Conservative pixel bounds; alpha < 1/255 outside.
            double mid = 0.5 * (sp.cov00 + sp.cov11);
            double lam_max = mid + std::sqrt(std::max(0.0, mid * mid - det));
            double radius = kBoundRadius * std::sqrt(lam_max);
            sp.x0 = std::max(0, static_cast<int>(std::floor(sp.mean.x - radius)));
            sp.x1 = std::min(view.width - 1, static_cast<int>(std::ceil(sp.mean.x + radius)));
            sp.y0 = std::max(0, static_cast<int>(std::floor(sp.mean.y - radius)));
            sp.y1 = std::min(view.height - 1, static_cast<int>(std::ceil(sp.mean.y + radius)));
            sp.valid = true;
        }
    });
    out.culled = culled.load();
    out.degenerate = degenerate.load();
    return out;
}

RenderOutput render(const CameraView& view, const SplatScene& scene, const std::vector<float>* scores,
                    const Vec3d& background) {
    ProjectOutput proj = project(view, scene, scores);

    RenderOutput out;
    out.culled = proj.culled;
    out.degenerate = proj.degenerate;
    out.cache.width = view.width;
    out.cache.height = view.height;
    out.cache.background = {std::min(1.0, std::max(0.0, background.x)),
                            std::min(1.0, std::max(0.0, background.y)),
                            std::min(1.0, std::max(0.0, background.z))};
    out.cache.scored = scores != nullptr;
    out.cache.scene_size = scene.count;

    out.cache.splats.reserve(proj.splats.size());
    for (ProjectedSplat& sp : proj.splats) {
        if (sp.valid && sp.x0 <= sp.x1 && sp.y0 <= sp.y1) out.cache.splats.push_back(sp);
    }
    out.cache.draw_order.resize(out.cache.splats.size());
    std::iota(out.cache.draw_order.begin(), out.cache.draw_order.end(), 0);
    std::sort(out.cache.draw_order.begin(), out.cache.draw_order.end(),
              [&](std::int32_t a, std::int32_t b) {
                  const ProjectedSplat& sa = out.cache.splats[static_cast<std::size_t>(a)];
                  const ProjectedSplat& sb = out.cache.splats[static_cast<std::size_t>(b)];
                  return sa.depth < sb.depth || (sa.depth == sb.depth && sa.index < sb.index);
              });

    int h = view.height, w = view.width;
    out.image.height = h;
    out.image.width = w;
    out.image.data.assign(static_cast<std::size_t>(h) * w * 3, 0.0);
    out.transmittance.assign(static_cast<std::size_t>(h) * w, 1.0);
    const Vec3d& bg = out.cache.background;

    parallel_for(static_cast<std::size_t>(h), [&](std::size_t rb, std::size_t re) {
        std::vector<const ProjectedSplat*> row;
        for (std::size_t r = rb; r < re; ++r) {
            row_splats(out.cache, static_cast<int>(r), row);
            for (int c = 0; c < w; ++c) {
                double rgb[3] = {0, 0, 0};
                double t_final = walk_pixel(
                    row, static_cast<int>(r), c,
                    [&](const ProjectedSplat& sp, double alpha, double, double t, double, double) {
                        rgb[0] += sp.color.x * alpha * t;
                        rgb[1] += sp.color.y * alpha * t;
                        rgb[2] += sp.color.z * alpha * t;
                    });
                double* px = out.image.pixel(static_cast<int>(r), c);
                px[0] = std::min(1.0, std::max(0.0, rgb[0] + bg.x * t_final));
                px[1] = std::min(1.0, std::max(0.0, rgb[1] + bg.y * t_final));
                px[2] = std::min(1.0, std::max(0.0, rgb[2] + bg.z * t_final));
                out.transmittance[r * static_cast<std::size_t>(w) + static_cast<std::size_t>(c)] = t_final;
            }
        }
    });
    return out;
}

namespace {

constexpr int kBandRows = 8;

// Shared driver for the backward passes: per pixel, collects the contributor
// list front-to-back and hands (hits, t_final, dL/dpixel) to the sink. Bands
// have a fixed height so accumulation order is thread-count invariant.
template <typename Sink>
void backward_pixels(const RenderOutput& out, const Image& dloss_dimage, Sink&& sink) {
    const RenderCache& cache = out.cache;
    int h = cache.height, w = cache.width;
    if (dloss_dimage.height != h || dloss_dimage.width != w)
        throw invalid_argument("render backward: gradient image shape mismatch");

    std::size_t bands = (static_cast<std::size_t>(h) + kBandRows - 1) / kBandRows;
    parallel_for(bands, [&](std::size_t bb, std::size_t be) {
        std::vector<PixelHit> hits;
        std::vector<const ProjectedSplat*> row;
        for (std::size_t band = bb; band < be; ++band) {
            int r0 = static_cast<int>(band) * kBandRows;
            int r1 = std::min(h, r0 + kBandRows);
            for (int r = r0; r < r1; ++r) {
                row_splats(cache, r, row);
                for (int c = 0; c < w; ++c) {
                    hits.clear();
                    double t_final = walk_pixel(row, r, c,
                                                [&](const ProjectedSplat& sp, double alpha, double g,
                                                    double t, double dx, double dy) {
                                                    hits.push_back(PixelHit{&sp, alpha, g, t, dx, dy});
                                                });
                    if (hits.empty()) continue;
                    sink(band, hits, t_final, dloss_dimage.pixel(r, c));
                }
            }
        }
    });
}

// dL/dalpha per contributor, iterating back to front.
template <typename Per>
void alpha_grads(const std::vector<PixelHit>& hits, double t_final, const double* gpix, const Vec3d& bg,
                 Per&& per) {
    double bg_dot = (bg.x * gpix[0] + bg.y * gpix[1] + bg.z * gpix[2]) * t_final;
    double suffix = 0.0;
    for (std::size_t j = hits.size(); j-- > 0;) {
        const PixelHit& hit = hits[j];
        double c_dot = hit.splat->color.x * gpix[0] + hit.splat->color.y * gpix[1] +
                       hit.splat->color.z * gpix[2];
        double dl_dalpha = c_dot * hit.t - (suffix + bg_dot) / (1.0 - hit.alpha);
        per(hit, dl_dalpha, gpix);
        suffix += c_dot * hit.alpha * hit.t;
    }
}

}  // namespace

std::vector<double> render_backward(const RenderOutput& out, const Image& dloss_dimage,
                                    bool covariance_path) {
    if (!out.cache.scored)
        throw invalid_argument("render_backward: forward pass was not score-reweighted");
    std::size_t n = out.cache.scene_size;
    std::size_t bands = (static_cast<std::size_t>(out.cache.height) + kBandRows - 1) / kBandRows;
    std::vector<std::vector<double>> partial(bands);
    for (auto& p : partial) p.assign(n, 0.0);

    backward_pixels(out, dloss_dimage,
                    [&](std::size_t band, const std::vector<PixelHit>& hits, double t_final,
                        const double* gpix) {
                        alpha_grads(hits, t_final, gpix, out.cache.background,
                                    [&](const PixelHit& hit, double dl_dalpha, const double*) {
                                        const ProjectedSplat& sp = *hit.splat;
                                        if (sp.opacity_eff * hit.g >= kAlphaCap) return;  // capped
                                        double dalpha_ds = sp.base_opacity * hit.g;
                                        if (covariance_path) {
                                            double vx = sp.conic00 * hit.dx + sp.conic01 * hit.dy;
                                            double vy = sp.conic01 * hit.dx + sp.conic11 * hit.dy;
                                            double quad = vx * (sp.base00 * vx + sp.base01 * vy) +
                                                          vy * (sp.base01 * vx + sp.base11 * vy);
                                            dalpha_ds += sp.opacity_eff * hit.g * sp.score * quad;
                                        }
                                        partial[band][static_cast<std::size_t>(sp.index)] +=
                                            dl_dalpha * dalpha_ds;
                                    });
                    });

    std::vector<double> grad(n, 0.0);
    for (const auto& p : partial)
        for (std::size_t i = 0; i < n; ++i) grad[i] += p[i];
    return grad;
}

ParamGrads render_param_backward(const RenderOutput& out, const Image& dloss_dimage) {
    std::size_t n = out.cache.scene_size;
    std::size_t bands = (static_cast<std::size_t>(out.cache.height) + kBandRows - 1) / kBandRows;
    struct Bufs {
        std::vector<double> pos, op, scale, dc;
    };
    std::vector<Bufs> partial(bands);
    for (auto& p : partial) {
        p.pos.assign(n * 3, 0.0);
        p.op.assign(n, 0.0);
        p.scale.assign(n * 3, 0.0);
        p.dc.assign(n * 3, 0.0);
    }

    backward_pixels(
        out, dloss_dimage,
        [&](std::size_t band, const std::vector<PixelHit>& hits, double t_final, const double* gpix) {
            Bufs& buf = partial[band];
            alpha_grads(hits, t_final, gpix, out.cache.background,
                        [&](const PixelHit& hit, double dl_dalpha, const double* g) {
                            const ProjectedSplat& sp = *hit.splat;
                            std::size_t i = static_cast<std::size_t>(sp.index);
                            // Color path: dL/dc_ch = g_ch * alpha * T, through the
                            // clamp and the DC basis weight.
                            for (int ch = 0; ch < 3; ++ch) {
                                if (sp.color_clamped[ch]) continue;
                                buf.dc[3 * i + static_cast<std::size_t>(ch)] +=
                                    g[ch] * hit.alpha * hit.t * kShC0;
                            }
                            if (sp.opacity_eff * hit.g >= kAlphaCap) return;
                            double o = sp.base_opacity;
                            buf.op[i] += dl_dalpha * hit.g * sp.score * o * (1.0 - o);
                            double vx = sp.conic00 * hit.dx + sp.conic01 * hit.dy;
                            double vy = sp.conic01 * hit.dx + sp.conic11 * hit.dy;
                            // Scale path: dG/draw_k = G * (sS)_k^2 * (v . m_k)^2.
                            double ss = sp.score * sp.score;
                            for (int k = 0; k < 3; ++k) {
                                double vm = vx * sp.m0[k] + vy * sp.m0[3 + k];
                                double dg_draw = hit.g * ss * sp.s_act[k] * sp.s_act[k] * vm * vm;
                                buf.scale[3 * i + static_cast<std::size_t>(k)] +=
                                    dl_dalpha * sp.opacity_eff * dg_draw;
                            }
                            // Position path through the projected mean.
                            double dmx = sp.opacity_eff * hit.g * vx;
                            double dmy = sp.opacity_eff * hit.g * vy;
                            for (int k = 0; k < 3; ++k) {
                                buf.pos[3 * i + static_cast<std::size_t>(k)] +=
                                    dl_dalpha * (dmx * sp.jw[k] + dmy * sp.jw[3 + k]);
                            }
                        });
        });

    ParamGrads grads;
    grads.position.assign(n * 3, 0.0);
    grads.opacity_raw.assign(n, 0.0);
    grads.scale_raw.assign(n * 3, 0.0);
    grads.sh_dc.assign(n * 3, 0.0);
    for (const auto& p : partial) {
        for (std::size_t i = 0; i < n * 3; ++i) {
            grads.position[i] += p.pos[i];
            grads.scale_raw[i] += p.scale[i];
            grads.sh_dc[i] += p.dc[i];
        }
        for (std::size_t i = 0; i < n; ++i) grads.opacity_raw[i] += p.op[i];
    }
    return grads;
}

}  // namespace rap
