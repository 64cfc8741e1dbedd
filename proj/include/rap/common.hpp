#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace rap {

inline constexpr const char* kVersion = "0.1.0";

// Error taxonomy mirrored by the CLI exit codes:
//   io_error -> 1, format/argument errors -> 2, numeric_error -> 3, eval_error -> 4.
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct format_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct invalid_argument : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct eval_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Vec2d {
    double x = 0.0, y = 0.0;
};

struct Vec3d {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3d operator+(const Vec3d& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3d operator-(const Vec3d& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3d operator*(double s) const { return {x * s, y * s, z * s}; }
};

inline double dot(const Vec3d& a, const Vec3d& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline Vec3d cross(const Vec3d& a, const Vec3d& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3d& a) { return std::sqrt(dot(a, a)); }

inline Vec3d normalized(const Vec3d& a) {
    double n = norm(a);
    return n > 0.0 ? a * (1.0 / n) : a;
}

// Row-major 3x3.
struct Mat3d {
    std::array<double, 9> m{};

    static Mat3d identity() {
        Mat3d r;
        r.m = {1, 0, 0, 0, 1, 0, 0, 0, 1};
        return r;
    }

    double operator()(int r, int c) const { return m[static_cast<size_t>(r) * 3 + c]; }
    double& operator()(int r, int c) { return m[static_cast<size_t>(r) * 3 + c]; }

    Vec3d operator*(const Vec3d& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }

    Mat3d operator*(const Mat3d& o) const {
        Mat3d r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0.0;
                for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
                r(i, j) = s;
            }
        return r;
    }

    Mat3d transposed() const {
        Mat3d r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
        return r;
    }
};

// Rotation matrix from a unit quaternion (w, x, y, z).
inline Mat3d quat_to_mat(double w, double x, double y, double z) {
    Mat3d r;
    r.m = {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
           2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
           2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
    return r;
}

// Sigmoid activation clamped to the open interval (0,1) in float32. Raw logits
// from real exports can be large enough that a bare float cast lands on 1.0f.
inline float sigmoid_activation(float x) {
    double o = 1.0 / (1.0 + std::exp(-static_cast<double>(x)));
    float f = static_cast<float>(o);
    if (f >= 1.0f) f = 0.99999994f;
    if (f <= 0.0f) f = 1e-30f;
    return f;
}

inline float exp_activation(float x) {
    float s = std::exp(x);
    return s > 0.0f ? s : 1e-30f;
}

}  // namespace rap
