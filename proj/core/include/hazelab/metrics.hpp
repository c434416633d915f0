#pragma once

#include "hazelab/tensor.hpp"

namespace hazelab {

struct LossWeights {
    double l1 = 0.8;
    double mse = 0.1;
    double ssim = 0.1;
};

// 10 * log10(peak^2 / mse); identical inputs return +infinity.
double psnr(const Tensor& x, const Tensor& y, double peak = 1.0);

// Gaussian-windowed SSIM (11x11, sigma 1.5, valid windows), computed on the
// channel mean by default or averaged per channel when per_channel is set.
// Assumes values in [0, 1].
double ssim(const Tensor& x, const Tensor& y, bool per_channel = false);

// w.l1 * mean|d| + w.mse * mean(d^2) + w.ssim * (1 - ssim); the SSIM term is
// skipped when its weight is zero.
double combined_loss(const Tensor& pred, const Tensor& target, const LossWeights& w = {});

}  // namespace hazelab
