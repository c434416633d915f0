#pragma once

#include "hazelab/tensor.hpp"

namespace hazelab {

// Shared kernel layer. Every function is pure: inputs are never mutated and
// results are freshly allocated. Reductions accumulate in 64-bit floats and
// traverse elements in a fixed order, so results are stable across runs.

// input (N, Ci, H, W), kernel (Co, Ci, kh, kw), bias (Co) or default tensor.
// Zero padding, cross-correlation orientation.
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias = {},
              int64_t stride = 1, int64_t padding = 0);

// kernel (C, 1, kh, kw), one filter per input channel, stride 1.
Tensor depthwise_conv2d(const Tensor& input, const Tensor& kernel, int64_t padding = 0);

Tensor bilinear_resize(const Tensor& input, int64_t out_h, int64_t out_w, bool align_corners);

// Normalizes over the channel axis at every (batch, y, x) location.
// gamma and beta are rank-1 tensors of length C.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps);

Tensor softmax_lastdim(const Tensor& x);

// Nearest-rank quantile of the flattened values: sorted[clamp(ceil(q*n)-1, 0, n-1)].
float quantile(const Tensor& values, double q);

Tensor global_avg_pool(const Tensor& x);  // (N, C, H, W) -> (N, C, 1, 1)

Tensor sigmoid(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, float negative_slope = 0.01f);
Tensor tanh(const Tensor& x);
Tensor softplus(const Tensor& x);

// Same-extent min over a window x window neighborhood, edge-replicated borders.
Tensor min_pool2d(const Tensor& x, int64_t window);

Tensor matmul(const Tensor& a, const Tensor& b);  // (m, k) x (k, n) -> (m, n)

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float s);
Tensor clamp01(const Tensor& a);

}  // namespace hazelab
