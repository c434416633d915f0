#include "hazelab/selftest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>
#include <sstream>

#include "hazelab/attention.hpp"
#include "hazelab/attribution.hpp"
#include "hazelab/bench_cache.hpp"
#include "hazelab/haze_physics.hpp"
#include "hazelab/image_io.hpp"
#include "hazelab/io_util.hpp"
#include "hazelab/metrics.hpp"
#include "hazelab/model.hpp"
#include "hazelab/ops.hpp"
#include "hazelab/reconstruction.hpp"

namespace hazelab {

namespace {

struct Rng {
    std::mt19937_64 gen;
    explicit Rng(uint64_t seed) : gen(seed) {}
    double u01() { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * u01(); }
    int64_t index(int64_t n) { return static_cast<int64_t>(gen() % static_cast<uint64_t>(n)); }
};

Tensor random_tensor(Rng& rng, std::vector<int64_t> shape, double lo, double hi) {
    Tensor t(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<float>(rng.uniform(lo, hi));
    return t;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    return a.shape() == b.shape() &&
           std::memcmp(a.data(), b.data(), static_cast<size_t>(a.numel()) * sizeof(float)) == 0;
}

// Small config keeping finite-difference sweeps affordable.
ModelConfig tiny_config(uint64_t seed) {
    ModelConfig cfg;
    cfg.channels = 8;
    cfg.depths = {1, 1, 1, 1};
    cfg.estimator_hidden = 4;
    cfg.feature_dim = 8;
    cfg.seed = seed;
    return cfg;
}

// Smooth synthetic haze: low-frequency radiance and transmission keep the
// estimator's bright-pixel selection stable under perturbation.
Tensor smooth_hazy_image(int64_t h, int64_t w) {
    Tensor clean({1, 3, h, w});
    Tensor t({1, 1, h, w});
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x) {
            const double u = static_cast<double>(x) / std::max<int64_t>(w - 1, 1);
            const double v = static_cast<double>(y) / std::max<int64_t>(h - 1, 1);
            clean.at(0, 0, y, x) = static_cast<float>(0.25 + 0.45 * u);
            clean.at(0, 1, y, x) = static_cast<float>(0.30 + 0.40 * v);
            clean.at(0, 2, y, x) = static_cast<float>(0.20 + 0.30 * u * v);
            t.at(0, 0, y, x) = static_cast<float>(0.45 + 0.40 * (1.0 - u) * (1.0 - v) + 0.05 * u);
        }
    const HazeScene scene = make_scene(std::move(clean), std::move(t), {0.85f, 0.80f, 0.90f});
    return synthesize_haze(scene);
}

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Failure {
    std::string msg;
};

void expect(bool ok, const std::string& msg) {
    if (!ok) throw Failure{msg};
}

std::string fmt(double v) {
    std::ostringstream oss;
    oss << v;
    return oss.str();
}

// --- check 1: window size table ------------------------------------------

void check_window_table(CheckResult& r) {
    const std::pair<int64_t, int64_t> table[] = {
        {512, 64}, {1024, 128}, {1025, 132}, {2048, 260}, {8, 1}};
    for (const auto& [n, want] : table) {
        const int64_t got = compute_window_size(n, n);
        expect(got == want, "window(" + std::to_string(n) + ") = " + std::to_string(got) +
                                ", want " + std::to_string(want));
    }
    // rectangular inputs follow min(H, W)
    expect(compute_window_size(512, 4096) == 64, "window(512x4096) should follow the short side");
    r.detail = "5 table entries exact";
}

// --- check 2: cache update vs reference recurrence ------------------------

// Reference: retention keeps the oldest floor(gamma*len) entries, the incoming
// chunk lands at the cache's chunk-length convention, then the cap drops from
// the front. Tracked on explicit id lists.
struct CacheSim {
    std::vector<int64_t> ids;
    int64_t conv = 0;
    int64_t next_id = 0;
    double gamma = 1.0;
    int64_t n_keep = 0;

    void update(int64_t new_len, double c_a, double eta, int64_t cap) {
        gamma = 1.0 - c_a * eta;
        n_keep = static_cast<int64_t>(std::floor(gamma * static_cast<double>(ids.size())));
        ids.resize(static_cast<size_t>(n_keep));
        const int64_t appended = conv > 0 ? conv : new_len;
        if (conv == 0) conv = new_len;
        for (int64_t i = 0; i < appended; ++i) ids.push_back(next_id++);
        if (cap == 0) cap = 4 * conv;
        while (static_cast<int64_t>(ids.size()) > cap) ids.erase(ids.begin());
    }
};

void check_cache_reference(CheckResult& r) {
    Rng rng(42);
    const auto t0 = Clock::now();
    for (int iter = 0; iter < 1000; ++iter) {
        const int64_t cache_len = 1 + rng.index(200);
        const int64_t new_len = 1 + rng.index(200);
        const double c_a = rng.u01();
        const double eta = rng.u01();
        const int64_t d = 3;

        KVCache cache(d, 0, eta);
        auto id_chunk = [d](int64_t len, int64_t base) {
            Tensor t({len, d});
            for (int64_t i = 0; i < len; ++i)
                for (int64_t j = 0; j < d; ++j)
                    t.at(i, j) = static_cast<float>(base + i);
            return t;
        };
        cache.append(id_chunk(cache_len, 0), id_chunk(cache_len, 0));
        const CacheUpdate u =
            cache.update(id_chunk(new_len, 100000), id_chunk(new_len, 100000), c_a);

        CacheSim sim;
        sim.update(cache_len, 0.0, eta, 0);  // first chunk, ids 0..cache_len-1
        sim.update(new_len, c_a, eta, 0);

        expect(cache.size() == static_cast<int64_t>(sim.ids.size()),
               "case " + std::to_string(iter) + ": length " + std::to_string(cache.size()) +
                   " vs reference " + std::to_string(sim.ids.size()));
        expect(u.kept == sim.n_keep, "case " + std::to_string(iter) + ": kept " +
                                         std::to_string(u.kept) + " vs reference " +
                                         std::to_string(sim.n_keep));
        expect(u.gamma == sim.gamma, "case " + std::to_string(iter) + ": gamma mismatch");
        // surviving old entries must be the oldest prefix, verified by id
        const Tensor keys = cache.keys();
        for (int64_t i = 0; i < sim.n_keep; ++i) {
            const auto want = static_cast<float>(sim.ids[static_cast<size_t>(i)]);
            expect(keys.at(i, 0) == want,
                   "case " + std::to_string(iter) + ": kept entry " + std::to_string(i) +
                       " holds id " + fmt(keys.at(i, 0)) + ", want " + fmt(want));
        }
    }
    const double elapsed = ms_since(t0);
    expect(elapsed < 1000.0, "took " + fmt(elapsed) + " ms, budget 1000 ms");
    r.detail = "1000 randomized updates match the reference";
}

// --- check 3: cache memory bound ------------------------------------------

void check_cache_bound(CheckResult& r) {
    ModelConfig cfg;
    cfg.channels = 8;  // bench dimension; lengths are dimension-independent
    const std::vector<BenchRow> rows = run_bench(cfg, default_bench_schedule());
    expect(rows.size() == 20, "expected 20 bench rows");

    int64_t sim_len = 0;
    bool evicted = false;
    for (size_t i = 0; i < rows.size(); ++i) {
        sim_len = static_cast<int64_t>(std::floor(0.5 * static_cast<double>(sim_len))) + 64;
        const BenchRow& row = rows[i];
        expect(row.gamma == 0.5, "step " + std::to_string(row.step) + ": gamma " + fmt(row.gamma));
        expect(row.cache_len_on == sim_len,
               "step " + std::to_string(row.step) + ": len_on " +
                   std::to_string(row.cache_len_on) + " vs recurrence " + std::to_string(sim_len));
        expect(row.cache_len_off == 64 * static_cast<int64_t>(i + 1),
               "step " + std::to_string(row.step) + ": len_off " +
                   std::to_string(row.cache_len_off));
        expect(row.bytes_on == row.cache_len_on * 8 * 4 * 2 &&
                   row.bytes_off == row.cache_len_off * 8 * 4 * 2,
               "step " + std::to_string(row.step) + ": bytes accounting");
        expect(row.bytes_on <= row.bytes_off, "eviction-on bytes exceed eviction-off");
        if (evicted)
            expect(row.bytes_on < row.bytes_off, "bytes_on not strictly below after eviction");
        if (row.cache_len_on < row.cache_len_off) evicted = true;
    }
    const BenchRow& last = rows.back();
    expect(last.cache_len_on <= 128, "final eviction-on length " +
                                         std::to_string(last.cache_len_on) + " exceeds 128");
    expect(last.cache_len_off == 1280, "final eviction-off length " +
                                           std::to_string(last.cache_len_off) + " is not 1280");
    const double reduction =
        1.0 - static_cast<double>(last.cache_len_on) / static_cast<double>(last.cache_len_off);
    expect(reduction >= 0.90, "reduction " + fmt(reduction) + " below 90%");
    r.detail = "len_on=" + std::to_string(last.cache_len_on) + " len_off=" +
               std::to_string(last.cache_len_off) + " reduction=" + fmt(reduction);
}

// --- check 4: empty-cache attention vs naive oracle ------------------------

void check_attention_oracle(CheckResult& r) {
    Rng rng(7);
    const auto t0 = Clock::now();
    double worst = 0.0;
    const int64_t windows[] = {1, 2, 4};
    const int64_t dims[] = {4, 8};
    for (int iter = 0; iter < 200; ++iter) {
        const int64_t w = windows[rng.index(3)];
        const int64_t d = dims[rng.index(2)];
        const int64_t t = w * w;
        const int64_t nw = 1 + rng.index(3);
        const Tensor q = random_tensor(rng, {nw, t, d}, -1.0, 1.0);
        const Tensor k = random_tensor(rng, {nw, t, d}, -1.0, 1.0);
        const Tensor v = random_tensor(rng, {nw, t, d}, -1.0, 1.0);
        KVCache cache(d, 0, 0.5);
        const Tensor got = cached_window_attention(q, k, v, cache, Tensor{});

        // naive reference, 64-bit softmax
        for (int64_t g = 0; g < nw; ++g)
            for (int64_t i = 0; i < t; ++i) {
                std::vector<double> logits(static_cast<size_t>(t));
                for (int64_t j = 0; j < t; ++j) {
                    double acc = 0.0;
                    for (int64_t p = 0; p < d; ++p)
                        acc += static_cast<double>(q.at(g, i, p)) *
                               static_cast<double>(k.at(g, j, p));
                    logits[static_cast<size_t>(j)] = acc / std::sqrt(static_cast<double>(d));
                }
                const double m = *std::max_element(logits.begin(), logits.end());
                double z = 0.0;
                for (double& l : logits) {
                    l = std::exp(l - m);
                    z += l;
                }
                for (int64_t p = 0; p < d; ++p) {
                    double acc = 0.0;
                    for (int64_t j = 0; j < t; ++j)
                        acc += logits[static_cast<size_t>(j)] * static_cast<double>(v.at(g, j, p));
                    const double want = acc / z;
                    worst = std::max(worst,
                                     std::abs(want - static_cast<double>(got.at(g, i, p))));
                }
            }
    }
    expect(worst < 1e-6, "max deviation " + fmt(worst));
    const double elapsed = ms_since(t0);
    expect(elapsed < 5000.0, "took " + fmt(elapsed) + " ms, budget 5000 ms");
    r.detail = "200 cases, max |delta| = " + fmt(worst);
}

// --- check 5: scattering-model round trip ----------------------------------

void check_asm_roundtrip(CheckResult& r) {
    Rng rng(11);
    double worst = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
        Tensor clean = random_tensor(rng, {1, 3, 8, 8}, 0.0, 1.0);
        Tensor t = random_tensor(rng, {1, 1, 8, 8}, 0.2, 1.0);
        const std::array<float, 3> a = {static_cast<float>(rng.uniform(0.5, 1.0)),
                                        static_cast<float>(rng.uniform(0.5, 1.0)),
                                        static_cast<float>(rng.uniform(0.5, 1.0))};
        const HazeScene scene = make_scene(clean, t, a);
        const Tensor hazy = synthesize_haze(scene);
        const Tensor rec = invert_haze(hazy, scene.transmission, a, 0.1f);
        for (int64_t i = 0; i < clean.numel(); ++i)
            worst = std::max(worst, std::abs(static_cast<double>(rec[i]) -
                                             static_cast<double>(clean[i])));
    }
    expect(worst < 1e-6, "round-trip max error " + fmt(worst));

    // cross-module: the physics upsample blend equals direct synthesis when
    // extents already match
    Rng rng2(12);
    const Tensor f = random_tensor(rng2, {1, 3, 6, 6}, 0.0, 1.0);
    const Tensor t6 = random_tensor(rng2, {1, 1, 6, 6}, 0.2, 1.0);
    const std::array<float, 3> a6 = {0.9f, 0.8f, 0.7f};
    const Tensor up = physics_upsample(f, t6, a6, 6, 6);
    const Tensor direct = synthesize_haze(make_scene(f, t6, a6));
    double cross = 0.0;
    for (int64_t i = 0; i < up.numel(); ++i)
        cross = std::max(cross,
                         std::abs(static_cast<double>(up[i]) - static_cast<double>(direct[i])));
    expect(cross < 1e-6, "blend vs synthesis max deviation " + fmt(cross));
    r.detail = "round-trip max=" + fmt(worst) + ", blend cross-check max=" + fmt(cross);
}

// --- check 6: zero-weight residual identity --------------------------------

void check_zero_identity(CheckResult& r) {
    ModelConfig cfg;
    cfg.channels = 4;
    cfg.depths = {1, 1, 1, 1};
    cfg.estimator_hidden = 2;
    cfg.feature_dim = 4;
    DehazeModel model(cfg, zero_weights(cfg));

    Rng rng(5);
    const std::pair<int64_t, int64_t> sizes[] = {{16, 16}, {20, 24}, {7, 5}};
    for (const auto& [h, w] : sizes) {
        const Tensor image = random_tensor(rng, {1, 3, h, w}, 0.0, 1.0);
        model.reset_caches();
        const DehazeResult res = model.dehaze(image);
        expect(bitwise_equal(res.j_hat, image),
               "output differs from input at " + std::to_string(h) + "x" + std::to_string(w));
    }
    r.detail = "identity holds bitwise at 16x16, 20x24, 7x5";
}

// --- check 7: normalization invariants -------------------------------------

void check_norm_invariants(CheckResult& r) {
    Rng rng(13);
    double worst_mean = 0.0, worst_var = 0.0, worst_scale = 0.0;
    const double scales[] = {0.5, 2.0, 8.0};
    for (int iter = 0; iter < 500; ++iter) {
        const int64_t c = 4 + rng.index(5);
        const int64_t h = 1 + rng.index(3);
        const int64_t w = 1 + rng.index(3);
        // per-channel ramp keeps the channel variance bounded away from zero
        Tensor x({1, c, h, w});
        for (int64_t ch = 0; ch < c; ++ch)
            for (int64_t y = 0; y < h; ++y)
                for (int64_t z = 0; z < w; ++z)
                    x.at(0, ch, y, z) =
                        static_cast<float>(0.5 * static_cast<double>(ch) + rng.uniform(-0.5, 0.5));
        const Tensor ones = Tensor::full({c}, 1.0f);
        const Tensor zeros({c});
        const Tensor rvec = random_tensor(rng, {c}, 8.0, 16.0);
        const Tensor bvec = random_tensor(rng, {c}, -1.0, 1.0);

        // moments of the pre-affine output (identity affine, tiny eps)
        for (const Tensor& y : {layer_norm(x, ones, zeros, 1e-8),
                                adaptive_layer_norm(x, rvec, bvec, ones, zeros, 1e-8)}) {
            for (int64_t yy = 0; yy < h; ++yy)
                for (int64_t zz = 0; zz < w; ++zz) {
                    double m = 0.0, ss = 0.0;
                    for (int64_t ch = 0; ch < c; ++ch) {
                        const double vv = y.at(0, ch, yy, zz);
                        m += vv;
                        ss += vv * vv;
                    }
                    m /= static_cast<double>(c);
                    const double var = ss / static_cast<double>(c) - m * m;
                    worst_mean = std::max(worst_mean, std::abs(m));
                    worst_var = std::max(worst_var, std::abs(var - 1.0));
                }
        }

        // positive rescaling of r must not move the output
        const double s = scales[iter % 3];
        Tensor r_scaled({c});
        for (int64_t i = 0; i < c; ++i) r_scaled[i] = static_cast<float>(s * rvec[i]);
        const Tensor y1 = adaptive_layer_norm(x, rvec, bvec, ones, zeros, 1e-5);
        const Tensor y2 = adaptive_layer_norm(x, r_scaled, bvec, ones, zeros, 1e-5);
        for (int64_t i = 0; i < y1.numel(); ++i)
            worst_scale = std::max(worst_scale, std::abs(static_cast<double>(y1[i]) -
                                                         static_cast<double>(y2[i])));
    }
    expect(worst_mean < 1e-5, "pre-affine mean " + fmt(worst_mean));
    expect(worst_var < 1e-4, "pre-affine variance deviation " + fmt(worst_var));
    expect(worst_scale < 1e-6, "scale-invariance deviation " + fmt(worst_scale));
    r.detail = "500 cases: |mean|<=" + fmt(worst_mean) + " |var-1|<=" + fmt(worst_var) +
               " scale |delta|<=" + fmt(worst_scale);
}

// --- check 8: attribution convergence and linearity ------------------------

void check_attribution(CheckResult& r) {
    const auto t0 = Clock::now();
    const ModelConfig cfg = tiny_config(21);
    DehazeModel model(cfg, init_weights(cfg));
    const Tensor hazy = smooth_hazy_image(16, 16);

    PathConfig p;
    p.steps = 32;
    const AttributionMap m32 = paam(model, hazy, p);
    p.steps = 64;
    const AttributionMap m64 = paam(model, hazy, p);

    double diff2 = 0.0, ref2 = 0.0;
    for (int64_t i = 0; i < m32.map.numel(); ++i) {
        const double d = static_cast<double>(m32.map[i]) - static_cast<double>(m64.map[i]);
        diff2 += d * d;
        ref2 += static_cast<double>(m64.map[i]) * static_cast<double>(m64.map[i]);
    }
    expect(ref2 > 0.0, "attribution map is identically zero");
    const double rel = std::sqrt(diff2 / ref2);
    expect(rel < 0.05, "step refinement changed the map by " + fmt(rel));

    PathConfig pl;
    pl.steps = 4;
    pl.lambda = 0.75;
    const AttributionMap a = paam(model, hazy, pl);
    pl.lambda = 1.5;
    const AttributionMap b = paam(model, hazy, pl);
    double worst = 0.0;
    for (int64_t i = 0; i < a.map.numel(); ++i)
        worst = std::max(worst, std::abs(static_cast<double>(b.map[i]) -
                                         2.0 * static_cast<double>(a.map[i])));
    expect(worst < 1e-6, "doubling lambda deviates by " + fmt(worst));

    const double elapsed = ms_since(t0);
    expect(elapsed < 600000.0, "took " + fmt(elapsed) + " ms, budget 600000 ms");
    r.detail = "32->64 rel l2 = " + fmt(rel) + ", lambda doubling |delta| <= " + fmt(worst);
}

// --- check 9: gradient oracle ----------------------------------------------

void check_gradient_oracle(CheckResult& r) {
    Rng rng(17);
    double worst = 0.0;
    for (int iter = 0; iter < 20; ++iter) {
        const Tensor x = random_tensor(rng, {1, 3, 2, 2}, -1.0, 1.0);
        const Tensor a = random_tensor(rng, {1, 3, 2, 2}, -1.0, 1.0);
        const Tensor b = random_tensor(rng, {1, 3, 2, 2}, -1.0, 1.0);
        auto f = [&a, &b](const Tensor& v) {
            double acc = 0.0;
            for (int64_t i = 0; i < v.numel(); ++i) {
                const double vi = v[i];
                acc += static_cast<double>(a[i]) * vi * vi + static_cast<double>(b[i]) * vi;
            }
            return acc;
        };
        const Tensor g = grad_fd(f, x, 1e-3);
        for (int64_t i = 0; i < x.numel(); ++i) {
            const double want =
                2.0 * static_cast<double>(a[i]) * static_cast<double>(x[i]) +
                static_cast<double>(b[i]);
            worst = std::max(worst, std::abs(static_cast<double>(g[i]) - want));
        }
    }
    expect(worst < 1e-6, "quadratic gradient error " + fmt(worst));

    // halving the step must shrink the error about 4x (second-order accuracy);
    // the eps/8 evaluation stands in for the exact gradient. eps must sit above
    // the float32 forward-pass noise floor (ratio collapses to ~1 below 1e-2)
    // and below the scale where relu kinks enter the stencil; 2.4e-2 is on the
    // measured plateau, flat from 2e-2 to 3.2e-2 for this seed.
    const ModelConfig cfg = tiny_config(101);
    DehazeModel model(cfg, init_weights(cfg));
    const Tensor base = smooth_hazy_image(8, 8);
    const Tensor t_ref = model.estimate_params(base).transmission;
    Tensor probe(base.shape());
    for (int64_t i = 0; i < base.numel(); ++i)
        probe[i] = static_cast<float>(0.9 * static_cast<double>(base[i]) + 0.05);
    auto f = [&model, &t_ref](const Tensor& v) { return loss_phy(v, model, t_ref); };
    const double eps = 2.4e-2;
    const Tensor g1 = grad_fd(f, probe, eps);
    const Tensor g2 = grad_fd(f, probe, eps / 2.0);
    const Tensor g8 = grad_fd(f, probe, eps / 8.0);
    double e1 = 0.0, e2 = 0.0;
    for (int64_t i = 0; i < probe.numel(); ++i) {
        const double d1 = static_cast<double>(g1[i]) - static_cast<double>(g8[i]);
        const double d2 = static_cast<double>(g2[i]) - static_cast<double>(g8[i]);
        e1 += d1 * d1;
        e2 += d2 * d2;
    }
    expect(e2 > 0.0, "step-halving reference degenerate");
    const double ratio = std::sqrt(e1 / e2);
    expect(ratio >= 3.5 && ratio <= 4.5, "error ratio " + fmt(ratio) + " outside [3.5, 4.5]");
    r.detail = "quadratic max err = " + fmt(worst) + ", halving ratio = " + fmt(ratio);
}

// --- check 10: metric sanity ------------------------------------------------

void check_metric_sanity(CheckResult& r) {
    Rng rng(23);
    const Tensor x = random_tensor(rng, {1, 3, 16, 16}, 0.0, 1.0);
    const double s = ssim(x, x);
    expect(std::abs(s - 1.0) < 1e-6, "ssim(x,x) = " + fmt(s));

    const Tensor zero({1, 1, 16, 16});
    const Tensor shifted = Tensor::full({1, 1, 16, 16}, 0.1f);
    const double p = psnr(shifted, zero);
    expect(std::abs(p - 20.0) < 1e-6, "psnr of constant 0.1 error = " + fmt(p));

    const double cl = combined_loss(x, x);
    expect(std::abs(cl) < 1e-7, "combined_loss(x,x) = " + fmt(cl));

    const LossWeights w;
    expect(w.l1 == 0.8 && w.mse == 0.1 && w.ssim == 0.1, "default loss weights drifted");
    r.detail = "ssim(x,x)=" + fmt(s) + " psnr=" + fmt(p) + " loss=" + fmt(cl);
}

// --- check 11: determinism and IO -------------------------------------------

void check_determinism_io(CheckResult& r) {
    namespace fs = std::filesystem;
    const fs::path dir =
        fs::temp_directory_path() / ("hazelab-selftest-" + std::to_string(Clock::now().time_since_epoch().count()));
    fs::create_directories(dir);
    struct Cleanup {
        fs::path d;
        ~Cleanup() {
            std::error_code ec;
            fs::remove_all(d, ec);
        }
    } cleanup{dir};

    ModelConfig cfg;
    cfg.channels = 4;
    cfg.depths = {1, 1, 1, 1};
    cfg.estimator_hidden = 2;
    cfg.feature_dim = 4;
    cfg.seed = 99;

    // same seed, same bytes
    const WeightStore ws1 = init_weights(cfg);
    const WeightStore ws2 = init_weights(cfg);
    for (const std::string& name : ws1.names())
        expect(bitwise_equal(ws1.get(name), ws2.get(name)), "re-init differs at " + name);

    ws1.save((dir / "weights.json").string());
    const WeightStore loaded = WeightStore::load((dir / "weights.json").string());
    expect(loaded.names() == ws1.names(), "round-trip changed tensor order");
    for (const std::string& name : ws1.names())
        expect(bitwise_equal(ws1.get(name), loaded.get(name)),
               "round-trip differs at " + name);

    // two independent models, bitwise-identical output files
    Rng rng(31);
    const Tensor image = random_tensor(rng, {1, 3, 20, 20}, 0.0, 1.0);
    DehazeModel m1(cfg, ws1), m2(cfg, loaded);
    const Tensor j1 = m1.dehaze(image).j_hat;
    const Tensor j2 = m2.dehaze(image).j_hat;
    expect(bitwise_equal(j1, j2), "two model instances disagree");
    write_ppm((dir / "out1.ppm").string(), clamp01(j1));
    write_ppm((dir / "out2.ppm").string(), clamp01(j2));
    expect(read_bytes((dir / "out1.ppm").string()) == read_bytes((dir / "out2.ppm").string()),
           "output image files differ");

    // 8-bit round trip within half a quantization step (plus float cast slack)
    const Tensor img8 = random_tensor(rng, {1, 3, 9, 7}, 0.0, 1.0);
    write_ppm((dir / "rt.ppm").string(), img8);
    const Tensor back = read_ppm((dir / "rt.ppm").string());
    double worst8 = 0.0;
    for (int64_t i = 0; i < img8.numel(); ++i)
        worst8 = std::max(worst8, std::abs(static_cast<double>(back[i]) -
                                           static_cast<double>(img8[i])));
    expect(worst8 <= 0.5 / 255.0 + 1e-7, "8-bit round trip error " + fmt(worst8));
    write_ppm((dir / "rt2.ppm").string(), img8);
    expect(read_bytes((dir / "rt.ppm").string()) == read_bytes((dir / "rt2.ppm").string()),
           "rewrite produced different bytes");

    const Tensor gray = random_tensor(rng, {1, 1, 6, 11}, 0.0, 1.0);
    write_pgm16((dir / "rt16.pgm").string(), gray);
    const Tensor back16 = read_pgm((dir / "rt16.pgm").string());
    double worst16 = 0.0;
    for (int64_t i = 0; i < gray.numel(); ++i)
        worst16 = std::max(worst16, std::abs(static_cast<double>(back16[i]) -
                                             static_cast<double>(gray[i])));
    expect(worst16 <= 0.5 / 65535.0 + 1e-7, "16-bit round trip error " + fmt(worst16));

    r.detail = "weights, outputs, and image round trips bitwise/quantization-exact";
}

using CheckFn = void (*)(CheckResult&);

struct CheckSpec {
    const char* name;
    CheckFn fn;
};

const CheckSpec kChecks[] = {
    {"window size table", check_window_table},
    {"cache update reference", check_cache_reference},
    {"cache memory bound", check_cache_bound},
    {"attention vs naive oracle", check_attention_oracle},
    {"scattering round trip", check_asm_roundtrip},
    {"zero-weight identity", check_zero_identity},
    {"normalization invariants", check_norm_invariants},
    {"attribution convergence", check_attribution},
    {"gradient oracle", check_gradient_oracle},
    {"metric sanity", check_metric_sanity},
    {"determinism and io", check_determinism_io},
};

}  // namespace

std::vector<CheckResult> run_selftest() {
    std::vector<CheckResult> results;
    int id = 1;
    for (const CheckSpec& spec : kChecks) {
        CheckResult r;
        r.id = id++;
        r.name = spec.name;
        const auto t0 = Clock::now();
        try {
            spec.fn(r);
            r.passed = true;
        } catch (const Failure& f) {
            r.passed = false;
            r.detail = f.msg;
        } catch (const std::exception& e) {
            r.passed = false;
            r.detail = std::string("unexpected error: ") + e.what();
        }
        r.ms = ms_since(t0);
        results.push_back(std::move(r));
    }
    return results;
}

bool all_passed(const std::vector<CheckResult>& results) {
    for (const CheckResult& r : results)
        if (!r.passed) return false;
    return !results.empty();
}

std::string format_check_line(const CheckResult& r) {
    std::ostringstream oss;
    oss << (r.passed ? "PASS" : "FAIL") << " " << r.id << "/11 " << r.name << " ("
        << static_cast<long long>(r.ms + 0.5) << " ms)";
    if (!r.detail.empty()) oss << " - " << r.detail;
    return oss.str();
}

}  // namespace hazelab
