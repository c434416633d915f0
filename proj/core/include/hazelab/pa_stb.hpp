#pragma once

#include <vector>

#include "hazelab/attention.hpp"
#include "hazelab/estimator.hpp"
#include "hazelab/tensor.hpp"

namespace hazelab {

// Transformer block parameters at channel width C. Attention projections are
// single-head and keep the width (d = C). drop_path_rate is carried through
// but inference treats the branch scaling as identity.
struct BlockParams {
    Tensor ln1_gamma, ln1_beta;  // (C)
    Tensor wq, bq;               // (C, C), (C)
    Tensor wk, bk;
    Tensor wv, bv;
    Tensor wo, bo;
    RelPosBias relpos;
    Tensor gamma1, beta1;        // (C) residual scale/shift on the attention branch
    Tensor ln2_gamma, ln2_beta;  // (C)
    Tensor mlp_w1, mlp_b1;       // (4C, C), (4C)
    Tensor mlp_w2, mlp_b2;       // (C, 4C), (C)
    Tensor gamma2, beta2;        // (C) residual scale/shift on the MLP branch
    float drop_path_rate = 0.f;
};

struct WindowParams {
    int64_t alpha = 8;
    int64_t beta = 4;
    int64_t tau = 1024;
};

struct BlockTrace {
    int64_t w_base = 0;
    int64_t w_adapt = 0;
    WindowGeometry geometry;
};

// Cyclic replication / truncation of a per-channel vector onto a stage width.
Tensor project_channel_vector(const Tensor& v, int64_t channels);

// x -> x + g1 * attn(adaptive_ln(x)) + b1 -> + g2 * mlp(ln(.)) + b2.
// The cache is evicted by retention first, attention then runs over the kept
// history plus the current windows, and the window-mean of the fresh K/V is
// appended afterwards (sequence-aligned to the cache's chunk convention when
// the window size changed between calls).
Tensor pa_stb_forward(const Tensor& x, const BlockParams& p, const AtmosphericParams& atm,
                      KVCache& cache, const WindowParams& wp = {}, double ln_eps = 1e-5,
                      BlockTrace* trace = nullptr);

struct BackboneConfig {
    int64_t base_channels = 32;
    std::vector<int64_t> depths{2, 2, 2, 2};  // one entry per 2x stage, 16x total
};

struct BackboneWeights {
    Tensor stem_w, stem_b;                         // (C, 3, 3, 3) stride-2 stem
    std::vector<std::vector<BlockParams>> stages;  // stages[i].size() == depths[i]
    std::vector<Tensor> down_w, down_b;            // stride-2 channel-doubling convs
};

int64_t backbone_out_channels(const BackboneConfig& cfg);
int64_t backbone_block_count(const BackboneConfig& cfg);

// Pads H and W up to multiples of 16 with zeros, then runs
// stem -> blocks -> down -> ... -> blocks. One cache per block, in order.
Tensor backbone_forward(const Tensor& x, const BackboneConfig& cfg, const BackboneWeights& w,
                        const AtmosphericParams& atm, std::vector<KVCache>& caches,
                        const WindowParams& wp = {}, double ln_eps = 1e-5,
                        std::vector<BlockTrace>* traces = nullptr);

}  // namespace hazelab
