#include "rap/metrics.hpp"

#include <array>
#include <cmath>

#include "rap/parallel.hpp"

namespace rap {

namespace {

void check_same_shape(const Image& a, const Image& b, const char* who) {
    if (a.height != b.height || a.width != b.width)
        throw invalid_argument(std::string(who) + ": image shapes differ (" + std::to_string(a.height) +
                               "x" + std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                               std::to_string(b.width) + ")");
    if (a.height <= 0 || a.width <= 0) throw invalid_argument(std::string(who) + ": empty image");
}

constexpr int kWin = 11;
constexpr int kHalf = kWin / 2;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kWin> gaussian_window() {
    std::array<double, kWin> w{};
    double sum = 0.0;
    for (int i = 0; i < kWin; ++i) {
        double d = i - kHalf;
        w[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
        sum += w[static_cast<std::size_t>(i)];
    }
    for (double& v : w) v /= sum;
    return w;
}

// Separable correlation with zero padding, output everywhere. The window is
// symmetric, so this also serves as the adjoint in the backward pass.
void conv_same(const std::vector<double>& in, int h, int w, std::vector<double>& tmp,
               std::vector<double>& out) {
    static const std::array<double, kWin> win = gaussian_window();
    tmp.assign(static_cast<std::size_t>(h) * w, 0.0);
    out.assign(static_cast<std::size_t>(h) * w, 0.0);
    parallel_for(static_cast<std::size_t>(h), [&](std::size_t rb, std::size_t re) {
        for (std::size_t r = rb; r < re; ++r) {
            for (int c = 0; c < w; ++c) {
                int k0 = std::max(0, kHalf - c);
                int k1 = std::min(kWin, w - c + kHalf);
                double s = 0.0;
                for (int k = k0; k < k1; ++k)
                    s += win[static_cast<std::size_t>(k)] * in[r * w + static_cast<std::size_t>(c - kHalf + k)];
                tmp[r * w + static_cast<std::size_t>(c)] = s;
            }
        }
    });
    parallel_for(static_cast<std::size_t>(h), [&](std::size_t rb, std::size_t re) {
        for (std::size_t rr = rb; rr < re; ++rr) {
            int r = static_cast<int>(rr);
            int k0 = std::max(0, kHalf - r);
            int k1 = std::min(kWin, h - r + kHalf);
            for (int c = 0; c < w; ++c) {
                double s = 0.0;
                for (int k = k0; k < k1; ++k)
                    s += win[static_cast<std::size_t>(k)] *
                         tmp[static_cast<std::size_t>(r - kHalf + k) * w + static_cast<std::size_t>(c)];
                out[rr * w + static_cast<std::size_t>(c)] = s;
            }
        }
    });
}

struct SsimPlanes {
    std::vector<double> x, y, mu_x, mu_y, m_xx, m_yy, m_xy;
};

}  // namespace

double psnr(const Image& img, const Image& ref) {
    check_same_shape(img, ref, "psnr");
    std::size_t n = img.data.size();
    double se = deterministic_sum(n, [&](std::size_t i) {
        double d = img.data[i] - ref.data[i];
        return d * d;
    });
    double mse = se / static_cast<double>(n);
    if (mse <= 0.0) return 100.0;
    return std::min(100.0, 10.0 * std::log10(1.0 / mse));
}

double dssim(const Image& img, const Image& ref, Image* grad_out) {
    check_same_shape(img, ref, "dssim");
    int h = img.height, w = img.width;
    if (h < kWin || w < kWin)
        throw invalid_argument("dssim: image smaller than the 11x11 window (" + std::to_string(h) + "x" +
                               std::to_string(w) + ")");

    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const std::size_t valid_h = static_cast<std::size_t>(h - 2 * kHalf);
    const std::size_t valid_w = static_cast<std::size_t>(w - 2 * kHalf);
    const double inv_count = 1.0 / (static_cast<double>(valid_h) * static_cast<double>(valid_w) * 3.0);

    if (grad_out) {
        grad_out->height = h;
        grad_out->width = w;
        grad_out->data.assign(plane * 3, 0.0);
    }

    std::vector<double> tmp, prod, g_mu(plane), g_m2(plane), g_mxy(plane), back1, back2, back3;
    SsimPlanes p;
    p.x.resize(plane);
    p.y.resize(plane);
    double ssim_sum = 0.0;

    for (int ch = 0; ch < 3; ++ch) {
        for (std::size_t i = 0; i < plane; ++i) {
            p.x[i] = img.data[i * 3 + static_cast<std::size_t>(ch)];
            p.y[i] = ref.data[i * 3 + static_cast<std::size_t>(ch)];
        }
        conv_same(p.x, h, w, tmp, p.mu_x);
        conv_same(p.y, h, w, tmp, p.mu_y);
        prod.resize(plane);
        for (std::size_t i = 0; i < plane; ++i) prod[i] = p.x[i] * p.x[i];
        conv_same(prod, h, w, tmp, p.m_xx);
        for (std::size_t i = 0; i < plane; ++i) prod[i] = p.y[i] * p.y[i];
        conv_same(prod, h, w, tmp, p.m_yy);
        for (std::size_t i = 0; i < plane; ++i) prod[i] = p.x[i] * p.y[i];
        conv_same(prod, h, w, tmp, p.m_xy);

        if (grad_out) {
            std::fill(g_mu.begin(), g_mu.end(), 0.0);
            std::fill(g_m2.begin(), g_m2.end(), 0.0);
            std::fill(g_mxy.begin(), g_mxy.end(), 0.0);
        }

        // Deterministic row-band accumulation of the SSIM map mean.
        double channel_sum = deterministic_sum(valid_h, [&](std::size_t vr) {
            std::size_t r = vr + kHalf;
            double rs = 0.0;
            for (std::size_t c = kHalf; c < static_cast<std::size_t>(w - kHalf); ++c) {
                std::size_t i = r * w + c;
                double mx = p.mu_x[i], my = p.mu_y[i];
                double sx = p.m_xx[i] - mx * mx;
                double sy = p.m_yy[i] - my * my;
                double sxy = p.m_xy[i] - mx * my;
                double a1 = 2.0 * mx * my + kC1;
                double a2 = 2.0 * sxy + kC2;
                double b1 = mx * mx + my * my + kC1;
                double b2 = sx + sy + kC2;
                double d = b1 * b2;
                double s = a1 * a2 / d;
                rs += s;
                if (grad_out) {
                    // Partials wrt the x-side moment maps (mu_x, m_xx, m_xy).
                    double ds_da1 = a2 / d;
                    double ds_da2 = a1 / d;
                    double ds_db1 = -s / b1;
                    double ds_db2 = -s / b2;
                    g_mu[i] = ds_da1 * 2.0 * my + ds_da2 * (-2.0 * my) + ds_db1 * 2.0 * mx +
                              ds_db2 * (-2.0 * mx);
                    g_m2[i] = ds_db2;
                    g_mxy[i] = ds_da2 * 2.0;
                }
            }
            return rs;
        });
        ssim_sum += channel_sum;

        if (grad_out) {
            // d(dssim)/ds = -inv_count/2 applied after the window correlations.
            conv_same(g_mu, h, w, tmp, back1);
            conv_same(g_m2, h, w, tmp, back2);
            conv_same(g_mxy, h, w, tmp, back3);
            const double scale = -0.5 * inv_count;
            parallel_for(plane, [&](std::size_t b, std::size_t e) {
                for (std::size_t i = b; i < e; ++i) {
                    double g = back1[i] + 2.0 * p.x[i] * back2[i] + p.y[i] * back3[i];
                    grad_out->data[i * 3 + static_cast<std::size_t>(ch)] = scale * g;
                }
            });
        }
    }

    double mean_ssim = ssim_sum * inv_count;
    return (1.0 - mean_ssim) / 2.0;
}

double ssim(const Image& img, const Image& ref) { return 1.0 - 2.0 * dssim(img, ref); }

}  // namespace rap
