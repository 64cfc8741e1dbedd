#include "rap/splat_scene.hpp"

#include <cmath>
#include <limits>

#include "rap/parallel.hpp"

namespace rap {

namespace {

bool all_finite(const std::vector<float>& v) {
    for (float x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace

void validate_scene(const SplatScene& scene, const std::string& context) {
    std::size_t n = scene.count;
    auto check_len = [&](const std::vector<float>& v, std::size_t per, const char* name) {
        if (v.size() != n * per)
            throw invalid_argument(context + ": field " + name + " has " + std::to_string(v.size()) +
                                   " values, expected " + std::to_string(n * per));
    };
    check_len(scene.positions, 3, "positions");
    check_len(scene.sh_dc, 3, "sh_dc");
    check_len(scene.sh_rest, 45, "sh_rest");
    check_len(scene.opacity_raw, 1, "opacity");
    check_len(scene.scale_raw, 3, "scale");
    check_len(scene.rotation, 4, "rotation");

    if (!all_finite(scene.positions) || !all_finite(scene.sh_dc) || !all_finite(scene.sh_rest) ||
        !all_finite(scene.opacity_raw) || !all_finite(scene.scale_raw) || !all_finite(scene.rotation))
        throw invalid_argument(context + ": scene contains non-finite values");

    for (std::size_t i = 0; i < n; ++i) {
        const float* q = &scene.rotation[4 * i];
        double nq = double(q[0]) * q[0] + double(q[1]) * q[1] + double(q[2]) * q[2] + double(q[3]) * q[3];
        if (nq <= 0.0)
            throw invalid_argument(context + ": zero-norm quaternion at primitive " + std::to_string(i));
    }
}

ActivatedSplats activate(const SplatScene& scene) {
    std::size_t n = scene.count;
    ActivatedSplats out;
    out.opacity.resize(n);
    out.scale.resize(n * 3);
    out.quat.resize(n * 4);
    std::string degenerate;
    parallel_for(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            out.opacity[i] = sigmoid_activation(scene.opacity_raw[i]);
            for (int k = 0; k < 3; ++k) out.scale[3 * i + k] = exp_activation(scene.scale_raw[3 * i + k]);
            const float* q = &scene.rotation[4 * i];
            double nq = std::sqrt(double(q[0]) * q[0] + double(q[1]) * q[1] + double(q[2]) * q[2] +
                                  double(q[3]) * q[3]);
            if (nq <= 0.0) {
                out.quat[4 * i] = std::numeric_limits<float>::quiet_NaN();
                continue;
            }
            for (int k = 0; k < 4; ++k) out.quat[4 * i + k] = static_cast<float>(q[k] / nq);
        }
    });
    for (std::size_t i = 0; i < n; ++i) {
        if (std::isnan(out.quat[4 * i]))
            throw invalid_argument("degenerate rotation: zero-norm quaternion at primitive " +
                                   std::to_string(i));
    }
    return out;
}

SplatScene select(const SplatScene& scene, const std::vector<bool>& keep_mask) {
    if (keep_mask.size() != scene.count)
        throw invalid_argument("select: mask length " + std::to_string(keep_mask.size()) +
                               " does not match scene size " + std::to_string(scene.count));
    std::size_t kept = 0;
    for (bool b : keep_mask) kept += b ? 1 : 0;
    SplatScene out;
    out.resize(kept);
    std::size_t j = 0;
    for (std::size_t i = 0; i < scene.count; ++i) {
        if (!keep_mask[i]) continue;
        for (int k = 0; k < 3; ++k) out.positions[3 * j + k] = scene.positions[3 * i + k];
        for (int k = 0; k < 3; ++k) out.sh_dc[3 * j + k] = scene.sh_dc[3 * i + k];
        for (int k = 0; k < 45; ++k) out.sh_rest[45 * j + k] = scene.sh_rest[45 * i + k];
        out.opacity_raw[j] = scene.opacity_raw[i];
        for (int k = 0; k < 3; ++k) out.scale_raw[3 * j + k] = scene.scale_raw[3 * i + k];
        for (int k = 0; k < 4; ++k) out.rotation[4 * j + k] = scene.rotation[4 * i + k];
        ++j;
    }
    return out;
}

void validate_view(const CameraView& view, const std::string& context) {
    if (view.width <= 0 || view.height <= 0)
        throw invalid_argument(context + ": non-positive image dimensions");
    if (!(view.fx > 0.0) || !(view.fy > 0.0))
        throw invalid_argument(context + ": focal lengths must be positive");
    if (!(view.cx >= 0.0 && view.cx < view.width))
        throw invalid_argument(context + ": principal point cx out of range");
    if (!(view.cy >= 0.0 && view.cy < view.height))
        throw invalid_argument(context + ": principal point cy out of range");
    Mat3d r = view.rotation();
    Mat3d rrt = r * r.transposed();
    Mat3d id = Mat3d::identity();
    for (int i = 0; i < 9; ++i) {
        if (std::abs(rrt.m[i] - id.m[i]) > 1e-5)
            throw invalid_argument(context + ": rotation block is not orthonormal within 1e-5");
    }
}

}  // namespace rap
