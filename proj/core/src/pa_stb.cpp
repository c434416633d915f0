#include "hazelab/pa_stb.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hazelab/ops.hpp"

namespace hazelab {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

// tokens (nw, t, C) x weight (O, C) + bias (O) -> (nw, t, O)
Tensor token_dense(const Tensor& tokens, const Tensor& w, const Tensor& b) {
    require(w.rank() == 2 && w.extent(1) == tokens.extent(2),
            "token projection: weight " + shape_string(w.shape()) + " does not match token width " +
                std::to_string(tokens.extent(2)));
    require(b.rank() == 1 && b.extent(0) == w.extent(0),
            "token projection: bias " + shape_string(b.shape()) + " does not match weight rows " +
                std::to_string(w.extent(0)));
    const int64_t nw = tokens.extent(0), t = tokens.extent(1), c = tokens.extent(2), o = w.extent(0);
    Tensor out({nw, t, o});
    for (int64_t g = 0; g < nw; ++g)
        for (int64_t i = 0; i < t; ++i)
            for (int64_t oc = 0; oc < o; ++oc) {
                double acc = static_cast<double>(b[oc]);
                for (int64_t ic = 0; ic < c; ++ic)
                    acc += static_cast<double>(w.at(oc, ic)) * static_cast<double>(tokens.at(g, i, ic));
                out.at(g, i, oc) = static_cast<float>(acc);
            }
    return out;
}

// (nw, t, d) -> (t, d), mean over windows
Tensor pool_windows(const Tensor& tokens) {
    const int64_t nw = tokens.extent(0), t = tokens.extent(1), d = tokens.extent(2);
    Tensor out({t, d});
    for (int64_t i = 0; i < t; ++i)
        for (int64_t j = 0; j < d; ++j) {
            double acc = 0.0;
            for (int64_t g = 0; g < nw; ++g) acc += static_cast<double>(tokens.at(g, i, j));
            out.at(i, j) = static_cast<float>(acc / static_cast<double>(nw));
        }
    return out;
}

double gelu(double x) {
    return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0)));
}

// per-location MLP over channels: w2 . gelu(w1 . x + b1) + b2
Tensor channel_mlp(const Tensor& x, const Tensor& w1, const Tensor& b1, const Tensor& w2,
                   const Tensor& b2) {
    const int64_t n = x.extent(0), c = x.extent(1), h = x.extent(2), w = x.extent(3);
    const int64_t hid = w1.extent(0);
    require(w1.rank() == 2 && w1.extent(1) == c && w2.rank() == 2 && w2.extent(0) == c &&
                w2.extent(1) == hid,
            "channel_mlp: weight shapes " + shape_string(w1.shape()) + " / " + shape_string(w2.shape()) +
                " do not match channel width " + std::to_string(c));
    Tensor out(x.shape());
    std::vector<double> hidden(static_cast<size_t>(hid));
    for (int64_t b = 0; b < n; ++b)
        for (int64_t y = 0; y < h; ++y)
            for (int64_t z = 0; z < w; ++z) {
                for (int64_t o = 0; o < hid; ++o) {
                    double acc = static_cast<double>(b1[o]);
                    for (int64_t i = 0; i < c; ++i)
                        acc += static_cast<double>(w1.at(o, i)) * static_cast<double>(x.at(b, i, y, z));
                    hidden[static_cast<size_t>(o)] = gelu(acc);
                }
                for (int64_t o = 0; o < c; ++o) {
                    double acc = static_cast<double>(b2[o]);
                    for (int64_t i = 0; i < hid; ++i)
                        acc += static_cast<double>(w2.at(o, i)) * hidden[static_cast<size_t>(i)];
                    out.at(b, o, y, z) = static_cast<float>(acc);
                }
            }
    return out;
}

// x + g * branch + s, all per-channel
Tensor residual_add(const Tensor& x, const Tensor& branch, const Tensor& g, const Tensor& s) {
    const int64_t n = x.extent(0), c = x.extent(1), h = x.extent(2), w = x.extent(3);
    Tensor out(x.shape());
    for (int64_t b = 0; b < n; ++b)
        for (int64_t ch = 0; ch < c; ++ch) {
            const float gg = g[ch], ss = s[ch];
            for (int64_t y = 0; y < h; ++y)
                for (int64_t z = 0; z < w; ++z)
                    out.at(b, ch, y, z) = x.at(b, ch, y, z) + gg * branch.at(b, ch, y, z) + ss;
        }
    return out;
}

}  // namespace

Tensor project_channel_vector(const Tensor& v, int64_t channels) {
    require(v.rank() == 1 && v.extent(0) >= 1,
            "project_channel_vector: source must be a non-empty rank-1 tensor, got " +
                shape_string(v.shape()));
    require(channels >= 1, "project_channel_vector: channels must be >= 1");
    Tensor out({channels});
    const int64_t len = v.extent(0);
    for (int64_t i = 0; i < channels; ++i) out[i] = v[i % len];
    return out;
}

Tensor pa_stb_forward(const Tensor& x, const BlockParams& p, const AtmosphericParams& atm,
                      KVCache& cache, const WindowParams& wp, double ln_eps, BlockTrace* trace) {
    require(x.rank() == 4, "pa_stb_forward: input must be rank 4, got " + shape_string(x.shape()));
    const int64_t c = x.extent(1), h = x.extent(2), w = x.extent(3);
    require(h >= 1 && w >= 1, "pa_stb_forward: spatial extents must be positive, got " +
                                  shape_string(x.shape()));
    require(p.wq.rank() == 2 && p.wq.extent(1) == c,
            "pa_stb_forward: wq " + shape_string(p.wq.shape()) + " does not match channels " +
                std::to_string(c));

    const Tensor r = project_channel_vector(atm.r, c);
    const Tensor b = project_channel_vector(atm.b, c);
    const Tensor xn = adaptive_layer_norm(x, r, b, p.ln1_gamma, p.ln1_beta, ln_eps);

    const int64_t w_base = compute_window_size(h, w, wp.alpha, wp.beta, wp.tau);
    const int64_t w_adapt = std::min({w_base, h, w});
    Partition part = window_partition(xn, w_adapt);

    const Tensor q = token_dense(part.windows, p.wq, p.bq);
    const Tensor k = token_dense(part.windows, p.wk, p.bk);
    const Tensor v = token_dense(part.windows, p.wv, p.bv);

    // window-mean of the fresh keys/values becomes this call's cache chunk;
    // append() resamples it onto the cache's chunk convention if needed
    const Tensor kp = pool_windows(k);
    const Tensor vp = pool_windows(v);

    const double c_a_mean = atm.c_a_mean();
    cache.retain(c_a_mean);
    const Tensor bias = p.relpos.materialize(w_adapt);
    const Tensor attn = cached_window_attention(q, k, v, cache, bias);
    cache.append(kp, vp);

    const Tensor attn_proj = token_dense(attn, p.wo, p.bo);
    const Tensor a = window_merge(attn_proj, part.geometry);
    const Tensor x_out = residual_add(x, a, p.gamma1, p.beta1);

    const Tensor mid = layer_norm(x_out, p.ln2_gamma, p.ln2_beta, ln_eps);
    const Tensor mo = channel_mlp(mid, p.mlp_w1, p.mlp_b1, p.mlp_w2, p.mlp_b2);
    Tensor out = residual_add(x_out, mo, p.gamma2, p.beta2);

    if (trace) {
        trace->w_base = w_base;
        trace->w_adapt = w_adapt;
        trace->geometry = part.geometry;
    }
    return out;
}

int64_t backbone_out_channels(const BackboneConfig& cfg) {
    require(!cfg.depths.empty(), "backbone: depths must be non-empty");
    return cfg.base_channels << (cfg.depths.size() - 1);
}

int64_t backbone_block_count(const BackboneConfig& cfg) {
    int64_t n = 0;
    for (int64_t d : cfg.depths) n += d;
    return n;
}

Tensor backbone_forward(const Tensor& x, const BackboneConfig& cfg, const BackboneWeights& w,
                        const AtmosphericParams& atm, std::vector<KVCache>& caches,
                        const WindowParams& wp, double ln_eps, std::vector<BlockTrace>* traces) {
    require(x.rank() == 4, "backbone_forward: input must be rank 4, got " + shape_string(x.shape()));
    require(cfg.depths.size() == 4, "backbone_forward: expected 4 stages, got " +
                                        std::to_string(cfg.depths.size()));
    require(static_cast<int64_t>(caches.size()) == backbone_block_count(cfg),
            "backbone_forward: cache count " + std::to_string(caches.size()) + " does not match block count " +
                std::to_string(backbone_block_count(cfg)));
    require(w.stages.size() == cfg.depths.size(), "backbone_forward: stage weights missing");

    // total reduction is 2^(stage count) = 16; pad so every stride divides
    const int64_t h = x.extent(2), ww = x.extent(3);
    const int64_t ph = (16 - h % 16) % 16;
    const int64_t pw = (16 - ww % 16) % 16;
    Tensor cur;
    if (ph == 0 && pw == 0) {
        cur = x;
    } else {
        cur = Tensor({x.extent(0), x.extent(1), h + ph, ww + pw});
        for (int64_t b = 0; b < x.extent(0); ++b)
            for (int64_t ch = 0; ch < x.extent(1); ++ch)
                for (int64_t y = 0; y < h; ++y)
                    for (int64_t z = 0; z < ww; ++z) cur.at(b, ch, y, z) = x.at(b, ch, y, z);
    }

    cur = conv2d(cur, w.stem_w, w.stem_b, 2, 1);
    if (traces) traces->resize(static_cast<size_t>(backbone_block_count(cfg)));
    size_t block_idx = 0;
    for (size_t s = 0; s < cfg.depths.size(); ++s) {
        require(static_cast<int64_t>(w.stages[s].size()) == cfg.depths[s],
                "backbone_forward: stage " + std::to_string(s) + " expects " +
                    std::to_string(cfg.depths[s]) + " blocks, got " + std::to_string(w.stages[s].size()));
        for (const BlockParams& p : w.stages[s]) {
            BlockTrace* tr = traces ? &(*traces)[block_idx] : nullptr;
            cur = pa_stb_forward(cur, p, atm, caches[block_idx], wp, ln_eps, tr);
            ++block_idx;
        }
        if (s + 1 < cfg.depths.size()) cur = conv2d(cur, w.down_w[s], w.down_b[s], 2, 1);
    }
    return cur;
}

}  // namespace hazelab
