#pragma once

#include <cstdint>
#include <vector>

#include "rap/splat_scene.hpp"

namespace rap {

// Rasterizer constants following the reference splatting conventions.
inline constexpr double kNearPlane = 0.01;
inline constexpr double kAlphaCap = 0.99;
inline constexpr double kAlphaSkip = 1.0 / 255.0;
inline constexpr double kCovDilation = 0.3;  // px^2 low-pass added to the 2D covariance

struct ProjectedSplat {
    bool valid = false;
    std::int32_t index = -1;
    Vec2d mean;                                   // pixel coordinates
    double depth = 0.0;                           // camera-space z, meters
    double cov00 = 0.0, cov01 = 0.0, cov11 = 0.0;     // 2D covariance incl. dilation
    double conic00 = 0.0, conic01 = 0.0, conic11 = 0.0;  // its inverse
    double base00 = 0.0, base01 = 0.0, base11 = 0.0;     // score-free covariance, pre-dilation
    double opacity_eff = 0.0;  // o * S
    double base_opacity = 0.0; // activated o
    double score = 1.0;
    Vec3d color;               // SH color for this view, clamped to [0,1]
    bool color_clamped[3] = {false, false, false};
    double jw[6] = {0, 0, 0, 0, 0, 0};    // J * W_rot (2x3, row-major)
    double m0[6] = {0, 0, 0, 0, 0, 0};    // J * W_rot * R_quat (2x3, row-major)
    double s_act[3] = {0, 0, 0};          // activated scales (score-free)
    int x0 = 0, x1 = -1, y0 = 0, y1 = -1;  // inclusive pixel bounds, empty if x0 > x1
};

struct ProjectOutput {
    std::vector<ProjectedSplat> splats;
    std::size_t culled = 0;      // behind the near plane
    std::size_t degenerate = 0;  // non-invertible 2D covariance
};

// EWA projection. When scores are given (length N), opacity and all three
// scales are multiplied by the per-primitive score before projection.
ProjectOutput project(const CameraView& view, const SplatScene& scene,
                      const std::vector<float>* scores = nullptr);

struct RenderCache {
    int width = 0, height = 0;
    Vec3d background;
    bool scored = false;
    std::size_t scene_size = 0;
    std::vector<ProjectedSplat> splats;    // contributing splats only
    std::vector<std::int32_t> draw_order;  // indices into splats, (depth, index) ascending
};

struct RenderOutput {
    Image image;                        // H x W x 3, in [0,1]
    std::vector<double> transmittance;  // H x W, remaining T after compositing
    std::size_t culled = 0, degenerate = 0;
    RenderCache cache;
};

RenderOutput render(const CameraView& view, const SplatScene& scene,
                    const std::vector<float>* scores = nullptr, const Vec3d& background = {0, 0, 0});

// Analytic d(loss)/dS per primitive for the loss whose image gradient is
// supplied. Includes both the opacity path (o*S) and the covariance path
// (s*S); the latter can be disabled for ablation.
std::vector<double> render_backward(const RenderOutput& out, const Image& dloss_dimage,
                                    bool covariance_path = true);

// Parameter gradients for the fixed-topology fit loop. Position gradients
// flow through the projected mean only (the Jacobian is treated as constant
// at the primitive center, and view-direction color changes are ignored).
struct ParamGrads {
    std::vector<double> position;     // N x 3
    std::vector<double> opacity_raw;  // N
    std::vector<double> scale_raw;    // N x 3
    std::vector<double> sh_dc;        // N x 3
};

ParamGrads render_param_backward(const RenderOutput& out, const Image& dloss_dimage);

// Global counter bumped by every project()/render() call; the rendering-free
// guarantee of the scoring path is asserted against it in tests.
std::uint64_t renderer_invocations();

}  // namespace rap
