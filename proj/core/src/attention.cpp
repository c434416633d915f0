#include "hazelab/attention.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hazelab/ops.hpp"

namespace hazelab {

namespace {

constexpr double kNormEps = 1e-6;  // unit-norm projection guard in N(v)

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

int64_t compute_window_size(int64_t h, int64_t w, int64_t alpha, int64_t beta, int64_t tau) {
    require(h >= 1 && w >= 1, "compute_window_size: extents must be positive, got " + std::to_string(h) +
                                  "x" + std::to_string(w));
    require(alpha >= 1, "compute_window_size: alpha must be >= 1, got " + std::to_string(alpha));
    require(beta >= 0, "compute_window_size: beta must be >= 0, got " + std::to_string(beta));
    const int64_t m = std::min(h, w);
    int64_t base = m / alpha;
    if (m > tau) base += beta;
    return std::max(base, int64_t{1});
}

Partition window_partition(const Tensor& x, int64_t window) {
    require(x.rank() == 4, "window_partition: input must be rank 4, got " + shape_string(x.shape()));
    require(window >= 1, "window_partition: window must be >= 1, got " + std::to_string(window));
    const int64_t n = x.extent(0), c = x.extent(1), h = x.extent(2), w = x.extent(3);

    WindowGeometry g;
    g.batch = n;
    g.channels = c;
    g.height = h;
    g.width = w;
    g.window = window;
    g.pad_h = (window - h % window) % window;
    g.pad_w = (window - w % window) % window;
    g.grid_h = (h + g.pad_h) / window;
    g.grid_w = (w + g.pad_w) / window;

    Tensor windows({n * g.grid_h * g.grid_w, window * window, c});
    for (int64_t b = 0; b < n; ++b)
        for (int64_t gy = 0; gy < g.grid_h; ++gy)
            for (int64_t gx = 0; gx < g.grid_w; ++gx) {
                const int64_t widx = (b * g.grid_h + gy) * g.grid_w + gx;
                for (int64_t iy = 0; iy < window; ++iy) {
                    const int64_t y = gy * window + iy;
                    for (int64_t ix = 0; ix < window; ++ix) {
                        const int64_t xx = gx * window + ix;
                        if (y >= h || xx >= w) continue;  // zero padding
                        const int64_t tok = iy * window + ix;
                        for (int64_t ch = 0; ch < c; ++ch)
                            windows.at(widx, tok, ch) = x.at(b, ch, y, xx);
                    }
                }
            }
    return {std::move(windows), g};
}

Tensor window_merge(const Tensor& windows, const WindowGeometry& g) {
    require(windows.rank() == 3, "window_merge: windows must be rank 3, got " + shape_string(windows.shape()));
    const int64_t expect_windows = g.batch * g.grid_h * g.grid_w;
    const int64_t expect_tokens = g.window * g.window;
    require(windows.extent(0) == expect_windows && windows.extent(1) == expect_tokens &&
                windows.extent(2) == g.channels,
            "window_merge: geometry mismatch, windows " + shape_string(windows.shape()) + " vs expected (" +
                std::to_string(expect_windows) + ", " + std::to_string(expect_tokens) + ", " +
                std::to_string(g.channels) + ")");

    Tensor out({g.batch, g.channels, g.height, g.width});
    for (int64_t b = 0; b < g.batch; ++b)
        for (int64_t gy = 0; gy < g.grid_h; ++gy)
            for (int64_t gx = 0; gx < g.grid_w; ++gx) {
                const int64_t widx = (b * g.grid_h + gy) * g.grid_w + gx;
                for (int64_t iy = 0; iy < g.window; ++iy) {
                    const int64_t y = gy * g.window + iy;
                    if (y >= g.height) continue;
                    for (int64_t ix = 0; ix < g.window; ++ix) {
                        const int64_t xx = gx * g.window + ix;
                        if (xx >= g.width) continue;
                        const int64_t tok = iy * g.window + ix;
                        for (int64_t ch = 0; ch < g.channels; ++ch)
                            out.at(b, ch, y, xx) = windows.at(widx, tok, ch);
                    }
                }
            }
    return out;
}

Tensor adaptive_layer_norm(const Tensor& x, const Tensor& r, const Tensor& b, const Tensor& gamma,
                           const Tensor& beta, double eps) {
    require(x.rank() == 4, "adaptive_layer_norm: input must be rank 4, got " + shape_string(x.shape()));
    const int64_t c = x.extent(1);
    require(r.rank() == 1 && r.extent(0) == c, "adaptive_layer_norm: r must have shape (" + std::to_string(c) +
                                                   "), got " + shape_string(r.shape()));
    require(b.rank() == 1 && b.extent(0) == c, "adaptive_layer_norm: b must have shape (" + std::to_string(c) +
                                                   "), got " + shape_string(b.shape()));

    auto unit = [c](const Tensor& v) {
        double ss = 0.0;
        for (int64_t i = 0; i < c; ++i) ss += static_cast<double>(v[i]) * static_cast<double>(v[i]);
        const double inv = 1.0 / (std::sqrt(ss) + kNormEps);
        std::vector<double> out(static_cast<size_t>(c));
        for (int64_t i = 0; i < c; ++i) out[static_cast<size_t>(i)] = static_cast<double>(v[i]) * inv;
        return out;
    };
    const std::vector<double> nr = unit(r);
    const std::vector<double> nb = unit(b);

    Tensor scaled(x.shape());
    const int64_t n = x.extent(0), h = x.extent(2), w = x.extent(3);
    for (int64_t bb = 0; bb < n; ++bb)
        for (int64_t ch = 0; ch < c; ++ch) {
            const double s = nr[static_cast<size_t>(ch)];
            const double t = nb[static_cast<size_t>(ch)];
            for (int64_t y = 0; y < h; ++y)
                for (int64_t z = 0; z < w; ++z)
                    scaled.at(bb, ch, y, z) =
                        static_cast<float>(static_cast<double>(x.at(bb, ch, y, z)) * s + t);
        }
    return layer_norm(scaled, gamma, beta, eps);
}

Retention retention_ratio(double c_a_mean, double eta, int64_t cache_len) {
    require(std::isfinite(c_a_mean) && c_a_mean >= 0.0 && c_a_mean <= 1.0,
            "retention_ratio: c_a_mean must be in [0, 1], got " + std::to_string(c_a_mean));
    require(std::isfinite(eta) && eta >= 0.0 && eta <= 1.0,
            "retention_ratio: eta must be in [0, 1], got " + std::to_string(eta));
    require(cache_len >= 0, "retention_ratio: cache length must be >= 0");
    Retention r;
    r.gamma = 1.0 - c_a_mean * eta;
    r.n_keep = static_cast<int64_t>(std::floor(r.gamma * static_cast<double>(cache_len)));
    return r;
}

Tensor align_kv(const Tensor& seq, int64_t target_len) {
    require(seq.rank() == 2, "align_kv: sequence must be rank 2, got " + shape_string(seq.shape()));
    require(seq.extent(0) >= 1, "align_kv: sequence must be non-empty");
    require(target_len >= 1, "align_kv: target length must be >= 1, got " + std::to_string(target_len));
    const int64_t len = seq.extent(0), d = seq.extent(1);
    if (len == target_len) return seq;

    Tensor out({target_len, d});
    for (int64_t i = 0; i < target_len; ++i) {
        double pos = 0.0;
        if (target_len > 1)
            pos = static_cast<double>(i) * static_cast<double>(len - 1) / static_cast<double>(target_len - 1);
        const int64_t i0 = static_cast<int64_t>(pos);
        const int64_t i1 = std::min(i0 + 1, len - 1);
        const double f = pos - static_cast<double>(i0);
        for (int64_t j = 0; j < d; ++j)
            out.at(i, j) = static_cast<float>(static_cast<double>(seq.at(i0, j)) * (1.0 - f) +
                                              static_cast<double>(seq.at(i1, j)) * f);
    }
    return out;
}

KVCache::KVCache(int64_t dim, int64_t max_len, double eta) : dim_(dim), max_len_(max_len), eta_(eta) {
    require(dim >= 1, "KVCache: dim must be >= 1, got " + std::to_string(dim));
    require(max_len >= 0, "KVCache: max_len must be >= 0, got " + std::to_string(max_len));
    require(eta >= 0.0 && eta <= 1.0, "KVCache: eta must be in [0, 1], got " + std::to_string(eta));
}

Tensor KVCache::keys() const {
    return Tensor({len_, dim_}, keys_);
}

Tensor KVCache::values() const {
    return Tensor({len_, dim_}, values_);
}

Retention KVCache::retain(double c_a_mean) {
    const Retention r = retention_ratio(c_a_mean, eta_, len_);
    pending_gamma_ = r.gamma;
    pending_evicted_ += len_ - r.n_keep;
    keys_.resize(static_cast<size_t>(r.n_keep * dim_));
    values_.resize(static_cast<size_t>(r.n_keep * dim_));
    len_ = r.n_keep;
    return r;
}

CacheUpdate KVCache::append(const Tensor& k, const Tensor& v) {
    require(dim_ >= 1, "KVCache: cache was not constructed with a dimension");
    require(k.rank() == 2 && v.rank() == 2, "KVCache: keys and values must be rank 2");
    require(k.extent(0) == v.extent(0), "KVCache: key and value lengths differ, " +
                                            std::to_string(k.extent(0)) + " vs " + std::to_string(v.extent(0)));
    require(k.extent(1) == dim_ && v.extent(1) == dim_,
            "KVCache: incoming dim " + std::to_string(k.extent(1)) + " does not match cache dim " +
                std::to_string(dim_));

    CacheUpdate u;
    u.gamma = pending_gamma_;
    u.evicted_retention = pending_evicted_;
    u.kept = len_;
    pending_gamma_ = 1.0;
    pending_evicted_ = 0;

    // The first chunk fixes the cache's length convention; later chunks are
    // resampled onto it so entries stay commensurate across window changes.
    Tensor ka = k, va = v;
    if (k.extent(0) > 0 && chunk_len_ > 0 && k.extent(0) != chunk_len_) {
        ka = align_kv(k, chunk_len_);
        va = align_kv(v, chunk_len_);
    }
    u.appended = ka.extent(0);

    keys_.insert(keys_.end(), ka.data(), ka.data() + ka.numel());
    values_.insert(values_.end(), va.data(), va.data() + va.numel());
    len_ += ka.extent(0);
    if (ka.extent(0) > 0 && chunk_len_ == 0) {
        chunk_len_ = ka.extent(0);
        if (max_len_ == 0) max_len_ = 4 * chunk_len_;
    }
    if (max_len_ > 0 && len_ > max_len_) {
        const int64_t drop = len_ - max_len_;
        keys_.erase(keys_.begin(), keys_.begin() + drop * dim_);
        values_.erase(values_.begin(), values_.begin() + drop * dim_);
        len_ = max_len_;
        u.evicted_cap = drop;
    }
    u.len_after = len_;
    history_.push_back(u);
    return u;
}

CacheUpdate KVCache::update(const Tensor& k, const Tensor& v, double c_a_mean) {
    retain(c_a_mean);
    return append(k, v);
}

void KVCache::reset() {
    keys_.clear();
    values_.clear();
    len_ = 0;
    chunk_len_ = 0;
    pending_gamma_ = 1.0;
    pending_evicted_ = 0;
    history_.clear();
}

Tensor RelPosBias::materialize(int64_t window) const {
    require(window >= 1, "RelPosBias: window must be >= 1, got " + std::to_string(window));
    const int64_t side = 2 * radius + 1;
    require(table.rank() == 2 && table.extent(0) == side && table.extent(1) == side,
            "RelPosBias: table must have shape (" + std::to_string(side) + ", " + std::to_string(side) +
                "), got " + shape_string(table.shape()));
    const int64_t t = window * window;
    Tensor out({t, t});
    for (int64_t i = 0; i < t; ++i) {
        const int64_t yi = i / window, xi = i % window;
        for (int64_t j = 0; j < t; ++j) {
            const int64_t yj = j / window, xj = j % window;
            const int64_t dy = std::min(std::max(yj - yi, -radius), radius);
            const int64_t dx = std::min(std::max(xj - xi, -radius), radius);
            out.at(i, j) = table.at(dy + radius, dx + radius);
        }
    }
    return out;
}

Tensor cached_window_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                               const KVCache& cache, const Tensor& bias) {
    require(q.rank() == 3, "cached_window_attention: q must be rank 3, got " + shape_string(q.shape()));
    require(q.same_extents(k) && q.same_extents(v),
            "cached_window_attention: q/k/v extents differ, " + shape_string(q.shape()) + " vs " +
                shape_string(k.shape()) + " vs " + shape_string(v.shape()));
    const int64_t nw = q.extent(0), t = q.extent(1), d = q.extent(2);
    require(d >= 1, "cached_window_attention: feature dim must be positive");
    require(cache.empty() || cache.dim() == d,
            "cached_window_attention: cache dim " + std::to_string(cache.dim()) +
                " does not match feature dim " + std::to_string(d));
    const bool has_bias = bias.numel() > 0;
    if (has_bias)
        require(bias.rank() == 2 && bias.extent(0) == t && bias.extent(1) == t,
                "cached_window_attention: bias must have shape (" + std::to_string(t) + ", " +
                    std::to_string(t) + "), got " + shape_string(bias.shape()));

    const Tensor kc = cache.keys();
    const Tensor vc = cache.values();
    const int64_t lc = cache.size();
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

    Tensor out(q.shape());
    std::vector<double> logits(static_cast<size_t>(lc + t));
    for (int64_t g = 0; g < nw; ++g)
        for (int64_t i = 0; i < t; ++i) {
            // scores over [cached; current]; bias only on current columns
            for (int64_t j = 0; j < lc; ++j) {
                double acc = 0.0;
                for (int64_t p = 0; p < d; ++p)
                    acc += static_cast<double>(q.at(g, i, p)) * static_cast<double>(kc.at(j, p));
                logits[static_cast<size_t>(j)] = acc * inv_sqrt_d;
            }
            for (int64_t j = 0; j < t; ++j) {
                double acc = 0.0;
                for (int64_t p = 0; p < d; ++p)
                    acc += static_cast<double>(q.at(g, i, p)) * static_cast<double>(k.at(g, j, p));
                acc *= inv_sqrt_d;
                if (has_bias) acc += static_cast<double>(bias.at(i, j));
                logits[static_cast<size_t>(lc + j)] = acc;
            }
            double m = logits[0];
            for (int64_t j = 1; j < lc + t; ++j) m = std::max(m, logits[static_cast<size_t>(j)]);
            double sum = 0.0;
            for (int64_t j = 0; j < lc + t; ++j) {
                logits[static_cast<size_t>(j)] = std::exp(logits[static_cast<size_t>(j)] - m);
                sum += logits[static_cast<size_t>(j)];
            }
            for (int64_t p = 0; p < d; ++p) {
                double acc = 0.0;
                for (int64_t j = 0; j < lc; ++j)
                    acc += logits[static_cast<size_t>(j)] * static_cast<double>(vc.at(j, p));
                for (int64_t j = 0; j < t; ++j)
                    acc += logits[static_cast<size_t>(lc + j)] * static_cast<double>(v.at(g, j, p));
                out.at(g, i, p) = static_cast<float>(acc / sum);
            }
        }
    return out;
}

}  // namespace hazelab
