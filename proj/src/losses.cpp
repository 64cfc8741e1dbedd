#include "rap/losses.hpp"

#include <cmath>

#include "rap/metrics.hpp"
#include "rap/parallel.hpp"

namespace rap {

double rendering_loss(const Image& rendered, const Image& gt, double lambda_dssim, Image* grad_out) {
    if (rendered.height != gt.height || rendered.width != gt.width)
        throw invalid_argument("rendering_loss: image shapes differ");
    std::size_t n = rendered.data.size();
    if (n == 0) throw invalid_argument("rendering_loss: empty images");

    double l1 = deterministic_sum(n, [&](std::size_t i) { return std::abs(rendered.data[i] - gt.data[i]); }) /
                static_cast<double>(n);

    double value = (1.0 - lambda_dssim) * l1;
    if (grad_out) {
        grad_out->height = rendered.height;
        grad_out->width = rendered.width;
        grad_out->data.assign(n, 0.0);
    }

    if (lambda_dssim != 0.0) {
        Image dgrad;
        double ds = dssim(rendered, gt, grad_out ? &dgrad : nullptr);
        value += lambda_dssim * ds;
        if (grad_out) {
            for (std::size_t i = 0; i < n; ++i) grad_out->data[i] = lambda_dssim * dgrad.data[i];
        }
    }

    if (grad_out) {
        double w = (1.0 - lambda_dssim) / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            double d = rendered.data[i] - gt.data[i];
            if (d > 0.0)
                grad_out->data[i] += w;
            else if (d < 0.0)
                grad_out->data[i] -= w;
        }
    }
    return value;
}

double pruning_loss(const std::vector<float>& scores, double target, std::vector<double>* grad_out) {
    std::size_t n = scores.size();
    if (n == 0) throw invalid_argument("pruning_loss: empty score vector");
    double mean = deterministic_sum(n, [&](std::size_t i) { return static_cast<double>(scores[i]); }) /
                  static_cast<double>(n);
    double diff = mean - target;
    if (grad_out) grad_out->assign(n, 2.0 * diff / static_cast<double>(n));
    return diff * diff;
}

namespace {

// Unnormalized per-bin kernel mass; out[k] = sum_i exp(-(S_i - c_k)^2 / 2s^2).
std::vector<double> kernel_mass(const std::vector<float>& scores, int bins, double sigma) {
    std::size_t n = scores.size();
    std::size_t nb = static_cast<std::size_t>(bins);
    std::vector<double> mass(nb, 0.0);
    std::size_t chunks = reduce_chunk_count(n);
    std::vector<std::vector<double>> partial(chunks);
    chunked_reduce(
        n,
        [&](std::size_t c, std::size_t lo, std::size_t hi) {
            auto& p = partial[c];
            p.assign(nb, 0.0);
            double inv2s2 = 1.0 / (2.0 * sigma * sigma);
            for (std::size_t i = lo; i < hi; ++i) {
                double s = scores[i];
                for (std::size_t k = 0; k < nb; ++k) {
                    double d = s - (static_cast<double>(k) + 0.5) / bins;
                    p[k] += std::exp(-d * d * inv2s2);
                }
            }
        },
        [&](std::size_t c) {
            for (std::size_t k = 0; k < nb; ++k) mass[k] += partial[c][k];
        });
    return mass;
}

}  // namespace

std::vector<double> soft_histogram(const std::vector<float>& scores, int bins, double sigma) {
    if (bins < 2) throw invalid_argument("soft_histogram: need at least 2 bins");
    if (!(sigma > 0.0)) throw invalid_argument("soft_histogram: sigma must be positive");
    if (scores.empty()) throw invalid_argument("soft_histogram: empty score vector");
    std::vector<double> mass = kernel_mass(scores, bins, sigma);
    double z = 0.0;
    for (double m : mass) z += m;
    if (z <= 0.0) throw numeric_error("soft_histogram: zero total mass");
    for (double& m : mass) m /= z;
    return mass;
}

double entropy_loss(const std::vector<float>& scores, int bins, double sigma,
                    std::vector<double>* grad_out, double epsilon) {
    if (bins < 2) throw invalid_argument("entropy_loss: need at least 2 bins");
    if (!(sigma > 0.0)) throw invalid_argument("entropy_loss: sigma must be positive");
    std::size_t n = scores.size();
    if (n == 0) throw invalid_argument("entropy_loss: empty score vector");
    std::size_t nb = static_cast<std::size_t>(bins);

    std::vector<double> mass = kernel_mass(scores, bins, sigma);
    double z = 0.0;
    for (double m : mass) z += m;
    if (z <= 0.0) throw numeric_error("entropy_loss: zero total mass");

    double inv_logb = 1.0 / std::log(static_cast<double>(bins));
    double entropy_norm = 0.0;
    // g_k = d(loss)/d(p_k); gbar folds in the normalization constraint.
    std::vector<double> gk(nb, 0.0);
    for (std::size_t k = 0; k < nb; ++k) {
        double p = mass[k] / z;
        entropy_norm -= inv_logb * p * std::log(p + epsilon);
        gk[k] = inv_logb * (std::log(p + epsilon) + p / (p + epsilon));
    }
    double loss = 1.0 - entropy_norm;

    if (grad_out) {
        double gbar = 0.0;
        for (std::size_t k = 0; k < nb; ++k) gbar += gk[k] * (mass[k] / z);
        grad_out->assign(n, 0.0);
        double inv2s2 = 1.0 / (2.0 * sigma * sigma);
        parallel_for(n, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) {
                double s = scores[i];
                double acc = 0.0;
                for (std::size_t k = 0; k < nb; ++k) {
                    double d = s - (static_cast<double>(k) + 0.5) / bins;
                    double w = std::exp(-d * d * inv2s2);
                    acc += (gk[k] - gbar) / z * w * (-d / (sigma * sigma));
                }
                (*grad_out)[i] = acc;
            }
        });
    }
    return loss;
}

}  // namespace rap
