#pragma once

#include <array>

#include "hazelab/tensor.hpp"

namespace hazelab {

// Decoder-side weights. Cr = refined channel width, Cin = backbone output
// width. Batch-norm runs on stored inference statistics.
struct ReconWeights {
    Tensor pw_w, pw_b;  // (Cr, Cin, 1, 1), (Cr)
    Tensor bn_gamma, bn_beta, bn_mean, bn_var;  // (Cr)
    float bn_eps = 1e-5f;
    Tensor dw_w, dw_b;    // (Cr, 1, 3, 3), (Cr)
    Tensor out_w, out_b;  // (3, Cr, 3, 3), (3)
};

// dwconv3x3(relu(bn(conv1x1(f))))
Tensor refine_features(const Tensor& f_d, const ReconWeights& w);

// resize(f) * t + A * (1 - t), with t resized to the target extents and A
// broadcast onto the first three channels, extra channels take mean(A).
Tensor physics_upsample(const Tensor& f_refined, const Tensor& transmission,
                        const std::array<float, 3>& atmospheric_light, int64_t target_h,
                        int64_t target_w);

// conv3x3(f_up) + i_orig, returned unclamped; clamp is presentation-only.
Tensor compose_output(const Tensor& f_up, const Tensor& i_orig, const ReconWeights& w);

}  // namespace hazelab
