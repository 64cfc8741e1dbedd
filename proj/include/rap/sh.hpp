#pragma once

#include "rap/common.hpp"

namespace rap {

// Real spherical harmonics, degree 3, with the coefficient ordering of the
// standard splat export (per channel: 1 DC + 15 higher-order).
inline constexpr double kShC0 = 0.28209479177387814;
inline constexpr double kShC1 = 0.4886025119029199;
inline constexpr double kShC2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                                    -1.0925484305920792, 0.5462742152960396};
inline constexpr double kShC3[7] = {-0.5900435899266435, 2.890611442640554,  -0.4570457994644658,
                                    0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                                    -0.5900435899266435};

// Evaluates one channel at unit direction d. dc is the f_dc coefficient,
// rest points at that channel's 15 higher-order coefficients. The result is
// offset by +0.5 and NOT clamped.
inline double sh_eval_channel(double dc, const float* rest, const Vec3d& d) {
    double x = d.x, y = d.y, z = d.z;
    double v = kShC0 * dc;
    v += -kShC1 * y * rest[0] + kShC1 * z * rest[1] - kShC1 * x * rest[2];
    double xx = x * x, yy = y * y, zz = z * z;
    double xy = x * y, yz = y * z, xz = x * z;
    v += kShC2[0] * xy * rest[3] + kShC2[1] * yz * rest[4] + kShC2[2] * (2.0 * zz - xx - yy) * rest[5] +
         kShC2[3] * xz * rest[6] + kShC2[4] * (xx - yy) * rest[7];
    v += kShC3[0] * y * (3.0 * xx - yy) * rest[8] + kShC3[1] * xy * z * rest[9] +
         kShC3[2] * y * (4.0 * zz - xx - yy) * rest[10] + kShC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy) * rest[11] +
         kShC3[4] * x * (4.0 * zz - xx - yy) * rest[12] + kShC3[5] * z * (xx - yy) * rest[13] +
         kShC3[6] * x * (xx - 3.0 * yy) * rest[14];
    return v + 0.5;
}

}  // namespace rap
