#pragma once

#include <vector>

#include "hazelab/tensor.hpp"

namespace hazelab {

// w_base = floor(min(H, W) / alpha) + beta * [min(H, W) > tau], floored at 1.
int64_t compute_window_size(int64_t h, int64_t w, int64_t alpha = 8, int64_t beta = 4,
                            int64_t tau = 1024);

struct WindowGeometry {
    int64_t batch = 0, channels = 0, height = 0, width = 0;  // pre-partition extents
    int64_t window = 0;                                      // adapted window actually used
    int64_t grid_h = 0, grid_w = 0;                          // windows per axis after padding
    int64_t pad_h = 0, pad_w = 0;                            // bottom/right zero padding
};

struct Partition {
    Tensor windows;  // (batch * grid_h * grid_w, window^2, C), row-major pixels per window
    WindowGeometry geometry;
};

// Pads bottom/right with zeros to a multiple of the window, then cuts
// non-overlapping windows into token sequences.
Partition window_partition(const Tensor& x, int64_t window);

// Exact inverse of window_partition: padded positions are dropped.
Tensor window_merge(const Tensor& windows, const WindowGeometry& geometry);

// LN'(x) = layer_norm(x * N(r) + N(b)) with N(v) = v / (||v||_2 + 1e-6).
// r and b are per-channel vectors; gamma/beta are the block's own affine.
Tensor adaptive_layer_norm(const Tensor& x, const Tensor& r, const Tensor& b, const Tensor& gamma,
                           const Tensor& beta, double eps);

struct Retention {
    double gamma = 1.0;   // 1 - c_a_mean * eta
    int64_t n_keep = 0;   // floor(gamma * cache_len)
};

Retention retention_ratio(double c_a_mean, double eta, int64_t cache_len);

// 1-D linear interpolation along the sequence axis, per feature dimension.
// Endpoints map to endpoints; equal lengths return the input bitwise.
Tensor align_kv(const Tensor& seq, int64_t target_len);

struct CacheUpdate {
    double gamma = 1.0;
    int64_t kept = 0;               // entries surviving retention
    int64_t appended = 0;
    int64_t evicted_retention = 0;  // tail dropped by the retention step
    int64_t evicted_cap = 0;        // oldest entries dropped by the max_len cap
    int64_t len_after = 0;
};

// Key/value history shared across forward calls. Entries are feature vectors
// of a fixed dimension; keys and values always hold the same count. Retention
// keeps the oldest prefix (floor(gamma * len) entries); append resamples the
// incoming chunk onto the cache's chunk-length convention; the cap drops from
// the front when a concat would overflow.
class KVCache {
public:
    KVCache() = default;
    // max_len 0 resolves to 4x the first appended chunk length.
    KVCache(int64_t dim, int64_t max_len, double eta);

    int64_t dim() const { return dim_; }
    int64_t size() const { return len_; }
    int64_t capacity() const { return max_len_; }
    double eta() const { return eta_; }
    bool empty() const { return len_ == 0; }

    // The cache's chunk-length convention, fixed by the first appended chunk
    // and cleared only by reset(). Later chunks are resampled onto it.
    int64_t chunk_len() const { return chunk_len_; }

    Tensor keys() const;    // (size, dim)
    Tensor values() const;  // (size, dim)

    Retention retain(double c_a_mean);
    CacheUpdate append(const Tensor& k, const Tensor& v);
    CacheUpdate update(const Tensor& k, const Tensor& v, double c_a_mean);
    void reset();

    const std::vector<CacheUpdate>& history() const { return history_; }

private:
    int64_t dim_ = 0;
    int64_t max_len_ = 0;
    double eta_ = 0.5;
    int64_t len_ = 0;
    int64_t chunk_len_ = 0;
    std::vector<float> keys_, values_;
    double pending_gamma_ = 1.0;
    int64_t pending_evicted_ = 0;
    std::vector<CacheUpdate> history_;
};

// Learned relative-position bias. The table covers offsets in [-radius,
// radius] per axis; larger offsets clamp to the rim, so one table serves any
// window size.
struct RelPosBias {
    int64_t radius = 7;
    Tensor table;  // (2 * radius + 1, 2 * radius + 1)

    Tensor materialize(int64_t window) const;  // (window^2, window^2)
};

// Per-window attention over [cached; current] keys and values. Cached entries
// are shared by every window; the bias applies to current-window columns only,
// cached columns score bias-free.
Tensor cached_window_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                               const KVCache& cache, const Tensor& bias);

}  // namespace hazelab
