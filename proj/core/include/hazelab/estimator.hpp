#pragma once

#include <array>

#include "hazelab/tensor.hpp"

namespace hazelab {

// Learned estimator weights. Shapes, with h = hidden width, d = fused feature
// length, m = 2 * (d + 3) and C = model base channels:
//   dark path   conv1 (h, 3, 5, 5), conv2 (1, h, 3, 3)
//   fuse path   conv1 (h, 4, 5, 5), conv2 (d, h, 3, 3)
//   mlp         fc1 (m, d + 3), fc2 (m, m), head (2C + 1, m)
struct EstimatorWeights {
    Tensor dark_conv1_w, dark_conv1_b;
    Tensor dark_conv2_w, dark_conv2_b;
    Tensor fuse_conv1_w, fuse_conv1_b;
    Tensor fuse_conv2_w, fuse_conv2_b;
    Tensor mlp_fc1_w, mlp_fc1_b;
    Tensor mlp_fc2_w, mlp_fc2_b;
    Tensor mlp_head_w, mlp_head_b;
};

struct PhysicalFactors {
    Tensor r;      // rank-1 (C), positive
    Tensor b;      // rank-1 (C), in (-1, 1)
    float c_a;     // in (0, 1)
};

struct AtmosphericParams {
    Tensor dark_channel;                       // (1, 1, H, W), values in (0, 1)
    std::array<float, 3> atmospheric_light{};  // in [0, 1]
    Tensor r;                                  // rank-1 (C)
    Tensor b;                                  // rank-1 (C)
    float c_a = 0.f;
    Tensor c_a_map;       // optional per-pixel variant; empty means scalar c_a
    Tensor transmission;  // (1, 1, H, W) = 1 - c_a * dark_channel

    double c_a_mean() const;
};

// sigmoid(conv3x3(relu(conv5x5(image)))), same padding throughout.
Tensor dark_channel_net(const Tensor& image, const EstimatorWeights& w);

// Mean RGB over the pixels whose predicted dark channel reaches the q_a
// nearest-rank quantile.
std::array<float, 3> estimate_atmospheric_light(const Tensor& image, const Tensor& dark,
                                                double q_a = 0.999);

// Global pooling over conv3x3(leaky_relu(conv5x5(image ++ dark))); returns the
// fused descriptor as a rank-1 tensor of length d.
Tensor fuse_features(const Tensor& image, const Tensor& dark, const EstimatorWeights& w);

// Two leaky-relu hidden layers over [f ++ A], then per-head activations:
// softplus for r, tanh for b, sigmoid for c_a.
PhysicalFactors physical_mlp(const Tensor& f, const std::array<float, 3>& atmospheric_light,
                             const EstimatorWeights& w);

Tensor transmission_map(const Tensor& dark, float c_a);
Tensor transmission_map(const Tensor& dark, const Tensor& c_a_map);

AtmosphericParams estimate(const Tensor& image, const EstimatorWeights& w, double q_a = 0.999);

}  // namespace hazelab
