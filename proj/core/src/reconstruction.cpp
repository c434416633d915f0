#include "hazelab/reconstruction.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "hazelab/ops.hpp"

namespace hazelab {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

Tensor refine_features(const Tensor& f_d, const ReconWeights& w) {
    require(f_d.rank() == 4, "refine_features: input must be rank 4, got " + shape_string(f_d.shape()));
    require(w.pw_w.rank() == 4 && w.pw_w.extent(2) == 1 && w.pw_w.extent(3) == 1,
            "refine_features: pointwise kernel must be 1x1, got " + shape_string(w.pw_w.shape()));
    const int64_t cr = w.pw_w.extent(0);
    require(w.bn_mean.rank() == 1 && w.bn_mean.extent(0) == cr && w.bn_var.extent(0) == cr &&
                w.bn_gamma.extent(0) == cr && w.bn_beta.extent(0) == cr,
            "refine_features: batch-norm parameter lengths do not match " + std::to_string(cr) + " channels");

    Tensor h = conv2d(f_d, w.pw_w, w.pw_b, 1, 0);

    const int64_t n = h.extent(0), hh = h.extent(2), ww = h.extent(3);
    for (int64_t c = 0; c < cr; ++c) {
        const double var = static_cast<double>(w.bn_var[c]) + static_cast<double>(w.bn_eps);
        require(var > 0.0 && std::isfinite(var),
                "refine_features: batch-norm variance must stay positive at channel " + std::to_string(c));
        const double inv = 1.0 / std::sqrt(var);
        const double mean = w.bn_mean[c], g = w.bn_gamma[c], b = w.bn_beta[c];
        for (int64_t bb = 0; bb < n; ++bb)
            for (int64_t y = 0; y < hh; ++y)
                for (int64_t x = 0; x < ww; ++x)
                    h.at(bb, c, y, x) =
                        static_cast<float>((static_cast<double>(h.at(bb, c, y, x)) - mean) * inv * g + b);
    }

    h = relu(h);
    h = depthwise_conv2d(h, w.dw_w, 1);
    for (int64_t c = 0; c < cr; ++c) {
        const float b = w.dw_b[c];
        for (int64_t bb = 0; bb < n; ++bb)
            for (int64_t y = 0; y < hh; ++y)
                for (int64_t x = 0; x < ww; ++x) h.at(bb, c, y, x) += b;
    }
    return h;
}

Tensor physics_upsample(const Tensor& f_refined, const Tensor& transmission,
                        const std::array<float, 3>& atmospheric_light, int64_t target_h,
                        int64_t target_w) {
    require(f_refined.rank() == 4, "physics_upsample: features must be rank 4, got " +
                                       shape_string(f_refined.shape()));
    require(transmission.rank() == 4 && transmission.extent(1) == 1,
            "physics_upsample: transmission must be (N, 1, H, W), got " + shape_string(transmission.shape()));
    require(target_h >= 1 && target_w >= 1, "physics_upsample: target extents must be positive");

    const Tensor f = bilinear_resize(f_refined, target_h, target_w, false);
    const Tensor t = bilinear_resize(transmission, target_h, target_w, false);

    const float a_mean = (atmospheric_light[0] + atmospheric_light[1] + atmospheric_light[2]) / 3.f;
    const int64_t n = f.extent(0), c = f.extent(1);
    Tensor out(f.shape());
    for (int64_t b = 0; b < n; ++b)
        for (int64_t ch = 0; ch < c; ++ch) {
            const float a = ch < 3 ? atmospheric_light[static_cast<size_t>(ch)] : a_mean;
            for (int64_t y = 0; y < target_h; ++y)
                for (int64_t x = 0; x < target_w; ++x) {
                    const float tv = t.at(b, 0, y, x);
                    out.at(b, ch, y, x) = f.at(b, ch, y, x) * tv + a * (1.f - tv);
                }
        }
    return out;
}

Tensor compose_output(const Tensor& f_up, const Tensor& i_orig, const ReconWeights& w) {
    require(f_up.rank() == 4, "compose_output: features must be rank 4, got " + shape_string(f_up.shape()));
    require(i_orig.rank() == 4 && i_orig.extent(1) == 3,
            "compose_output: original image must be (N, 3, H, W), got " + shape_string(i_orig.shape()));
    require(w.out_w.rank() == 4 && w.out_w.extent(0) == 3,
            "compose_output: output kernel must emit 3 channels, got " + shape_string(w.out_w.shape()));
    require(f_up.extent(2) == i_orig.extent(2) && f_up.extent(3) == i_orig.extent(3),
            "compose_output: feature extents " + shape_string(f_up.shape()) + " do not match image " +
                shape_string(i_orig.shape()));

    Tensor j = conv2d(f_up, w.out_w, w.out_b, 1, 1);
    return add(j, i_orig);
}

}  // namespace hazelab
