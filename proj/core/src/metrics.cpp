#include "hazelab/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace hazelab {

namespace {

constexpr int64_t kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

std::vector<double> gaussian_taps() {
    std::vector<double> g(kWin);
    double sum = 0.0;
    for (int64_t i = 0; i < kWin; ++i) {
        const double d = static_cast<double>(i) - (kWin - 1) / 2.0;
        g[static_cast<size_t>(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        sum += g[static_cast<size_t>(i)];
    }
    for (double& v : g) v /= sum;
    return g;
}

// separable valid-mode Gaussian filter over an (H, W) plane
std::vector<double> gauss_filter(const std::vector<double>& plane, int64_t h, int64_t w) {
    static const std::vector<double> taps = gaussian_taps();
    const int64_t ow = w - kWin + 1;
    const int64_t oh = h - kWin + 1;
    std::vector<double> mid(static_cast<size_t>(h * ow));
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int64_t i = 0; i < kWin; ++i)
                acc += taps[static_cast<size_t>(i)] * plane[static_cast<size_t>(y * w + x + i)];
            mid[static_cast<size_t>(y * ow + x)] = acc;
        }
    std::vector<double> out(static_cast<size_t>(oh * ow));
    for (int64_t y = 0; y < oh; ++y)
        for (int64_t x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int64_t i = 0; i < kWin; ++i)
                acc += taps[static_cast<size_t>(i)] * mid[static_cast<size_t>((y + i) * ow + x)];
            out[static_cast<size_t>(y * ow + x)] = acc;
        }
    return out;
}

double ssim_plane(const std::vector<double>& x, const std::vector<double>& y, int64_t h, int64_t w) {
    const std::vector<double> mu_x = gauss_filter(x, h, w);
    const std::vector<double> mu_y = gauss_filter(y, h, w);
    std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const std::vector<double> e_xx = gauss_filter(xx, h, w);
    const std::vector<double> e_yy = gauss_filter(yy, h, w);
    const std::vector<double> e_xy = gauss_filter(xy, h, w);

    double total = 0.0;
    for (size_t i = 0; i < mu_x.size(); ++i) {
        const double var_x = e_xx[i] - mu_x[i] * mu_x[i];
        const double var_y = e_yy[i] - mu_y[i] * mu_y[i];
        const double cov = e_xy[i] - mu_x[i] * mu_y[i];
        const double num = (2.0 * mu_x[i] * mu_y[i] + kC1) * (2.0 * cov + kC2);
        const double den = (mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + kC1) * (var_x + var_y + kC2);
        total += num / den;
    }
    return total / static_cast<double>(mu_x.size());
}

// channel mean (or a single channel when ch >= 0) of one batch item
std::vector<double> to_plane(const Tensor& t, int64_t b, int64_t ch) {
    const int64_t c = t.extent(1), h = t.extent(2), w = t.extent(3);
    std::vector<double> plane(static_cast<size_t>(h * w), 0.0);
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x) {
            double v = 0.0;
            if (ch >= 0) {
                v = t.at(b, ch, y, x);
            } else {
                for (int64_t cc = 0; cc < c; ++cc) v += static_cast<double>(t.at(b, cc, y, x));
                v /= static_cast<double>(c);
            }
            plane[static_cast<size_t>(y * w + x)] = v;
        }
    return plane;
}

}  // namespace

double psnr(const Tensor& x, const Tensor& y, double peak) {
    require(x.same_extents(y), "psnr: extent mismatch, " + shape_string(x.shape()) + " vs " +
                                   shape_string(y.shape()));
    require(x.numel() > 0, "psnr: empty input");
    require(peak > 0, "psnr: peak must be positive");
    double mse = 0.0;
    for (int64_t i = 0; i < x.numel(); ++i) {
        const double d = static_cast<double>(x[i]) - static_cast<double>(y[i]);
        mse += d * d;
    }
    mse /= static_cast<double>(x.numel());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Tensor& x, const Tensor& y, bool per_channel) {
    require(x.rank() == 4 && y.rank() == 4, "ssim: inputs must be rank 4");
    require(x.same_extents(y), "ssim: extent mismatch, " + shape_string(x.shape()) + " vs " +
                                   shape_string(y.shape()));
    const int64_t n = x.extent(0), c = x.extent(1), h = x.extent(2), w = x.extent(3);
    require(h >= kWin && w >= kWin, "ssim: image " + std::to_string(h) + "x" + std::to_string(w) +
                                        " smaller than the " + std::to_string(kWin) + "x" +
                                        std::to_string(kWin) + " window");

    double total = 0.0;
    int64_t count = 0;
    for (int64_t b = 0; b < n; ++b) {
        if (per_channel && c > 1) {
            for (int64_t ch = 0; ch < c; ++ch) {
                total += ssim_plane(to_plane(x, b, ch), to_plane(y, b, ch), h, w);
                ++count;
            }
        } else {
            total += ssim_plane(to_plane(x, b, -1), to_plane(y, b, -1), h, w);
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

double combined_loss(const Tensor& pred, const Tensor& target, const LossWeights& w) {
    require(pred.same_extents(target), "combined_loss: extent mismatch, " + shape_string(pred.shape()) +
                                           " vs " + shape_string(target.shape()));
    require(pred.numel() > 0, "combined_loss: empty input");
    require(w.l1 >= 0 && w.mse >= 0 && w.ssim >= 0, "combined_loss: weights must be nonnegative");
    double l1 = 0.0, mse = 0.0;
    for (int64_t i = 0; i < pred.numel(); ++i) {
        const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
        l1 += std::abs(d);
        mse += d * d;
    }
    l1 /= static_cast<double>(pred.numel());
    mse /= static_cast<double>(pred.numel());
    double loss = w.l1 * l1 + w.mse * mse;
    if (w.ssim != 0.0) loss += w.ssim * (1.0 - ssim(pred, target));
    return loss;
}

}  // namespace hazelab
