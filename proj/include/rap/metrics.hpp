#pragma once

#include "rap/splat_scene.hpp"

namespace rap {

// 10*log10(1/MSE) over all channels, values in [0,1]; identical images (and
// anything above) report the 100 dB cap.
double psnr(const Image& img, const Image& ref);

// (1 - SSIM)/2 with an 11x11 Gaussian window (sigma 1.5), C1=0.01^2,
// C2=0.03^2, channel-averaged over window centers where the full window fits.
// If grad_out is non-null it receives d(dssim)/d(img) (same layout as img).
double dssim(const Image& img, const Image& ref, Image* grad_out = nullptr);

double ssim(const Image& img, const Image& ref);

}  // namespace rap
