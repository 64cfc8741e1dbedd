#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rap/common.hpp"

namespace rap {

// Structure-of-arrays container for N Gaussian primitives. Raw (pre-activation)
// storage matches the on-disk layout: opacity is a logit, scales are log-space,
// sh_rest rows are channel-major (15 R, 15 G, 15 B coefficients).
struct SplatScene {
    std::size_t count = 0;
    std::vector<float> positions;    // N x 3
    std::vector<float> sh_dc;        // N x 3
    std::vector<float> sh_rest;      // N x 45
    std::vector<float> opacity_raw;  // N
    std::vector<float> scale_raw;    // N x 3
    std::vector<float> rotation;     // N x 4, (w, x, y, z)

    void resize(std::size_t n) {
        count = n;
        positions.assign(n * 3, 0.0f);
        sh_dc.assign(n * 3, 0.0f);
        sh_rest.assign(n * 45, 0.0f);
        opacity_raw.assign(n, 0.0f);
        scale_raw.assign(n * 3, 0.0f);
        rotation.assign(n * 4, 0.0f);
    }

    Vec3d position(std::size_t i) const {
        return {positions[3 * i], positions[3 * i + 1], positions[3 * i + 2]};
    }
};

// Throws if array lengths disagree with count, any value is non-finite, or a
// quaternion has zero norm.
void validate_scene(const SplatScene& scene, const std::string& context);

struct ActivatedSplats {
    std::vector<float> opacity;  // N, strictly in (0,1)
    std::vector<float> scale;    // N x 3, strictly > 0
    std::vector<float> quat;     // N x 4, unit norm
};

// o = sigmoid(opacity_raw), s = exp(scale_raw), quaternions normalized.
ActivatedSplats activate(const SplatScene& scene);

// Keeps rows where mask[i] is true, preserving order.
SplatScene select(const SplatScene& scene, const std::vector<bool>& keep_mask);

struct Image {
    int height = 0, width = 0;
    std::vector<double> data;  // H x W x 3, row-major RGB in [0,1]

    bool empty() const { return data.empty(); }
    double* pixel(int r, int c) { return data.data() + (static_cast<std::size_t>(r) * width + c) * 3; }
    const double* pixel(int r, int c) const {
        return data.data() + (static_cast<std::size_t>(r) * width + c) * 3;
    }
};

// Pinhole camera (OpenCV axes: +x right, +y down, +z forward) with an optional
// ground-truth image attached.
struct CameraView {
    int width = 0, height = 0;
    double fx = 0, fy = 0, cx = 0, cy = 0;
    std::array<double, 16> world_to_camera{};  // row-major 4x4 rigid transform
    std::string image_name;
    Image gt;

    Mat3d rotation() const {
        Mat3d r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r(i, j) = world_to_camera[static_cast<std::size_t>(i) * 4 + j];
        return r;
    }
    Vec3d translation() const { return {world_to_camera[3], world_to_camera[7], world_to_camera[11]}; }
    Vec3d camera_center() const {
        Mat3d rt = rotation().transposed();
        Vec3d t = translation();
        return rt * (t * -1.0);
    }
};

// Checks intrinsics ranges and that the rotation block is orthonormal within
// 1e-5 (max elementwise deviation of R * R^T from identity).
void validate_view(const CameraView& view, const std::string& context);

}  // namespace rap
