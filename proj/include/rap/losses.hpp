#pragma once

#include <vector>

#include "rap/splat_scene.hpp"

namespace rap {

// (1 - lambda_dssim) * L1 + lambda_dssim * D-SSIM, channel-mean L1. grad_out
// (optional) receives d(loss)/d(rendered). With lambda_dssim = 0 the SSIM
// window constraint does not apply.
double rendering_loss(const Image& rendered, const Image& gt, double lambda_dssim,
                      Image* grad_out = nullptr);

// (mean(S) - target)^2 with its gradient.
double pruning_loss(const std::vector<float>& scores, double target, std::vector<double>* grad_out = nullptr);

// Gaussian-kernel soft histogram over bin centers (k + 0.5)/bins, normalized
// to sum 1.
std::vector<double> soft_histogram(const std::vector<float>& scores, int bins, double sigma);

// 1 - normalized entropy of the soft histogram, with analytic gradient.
double entropy_loss(const std::vector<float>& scores, int bins, double sigma,
                    std::vector<double>* grad_out = nullptr, double epsilon = 1e-12);

struct LossWeights {
    double render = 1.0;
    double prune = 1.0;
    double entropy = 0.25;
};

inline double total_loss(const LossWeights& w, double render, double prune, double entropy) {
    return w.render * render + w.prune * prune + w.entropy * entropy;
}

}  // namespace rap
