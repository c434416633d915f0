#include <benchmark/benchmark.h>

#include <cstdint>
#include <random>
#include <vector>

#include "hazelab/attention.hpp"
#include "hazelab/config.hpp"
#include "hazelab/model.hpp"
#include "hazelab/ops.hpp"
#include "hazelab/tensor.hpp"
#include "hazelab/weight_store.hpp"

namespace {

hazelab::Tensor random_tensor(const std::vector<int64_t>& shape, uint64_t seed) {
    std::mt19937_64 rng(seed);
    hazelab::Tensor t(shape);
    for (float& v : t.values())
        v = static_cast<float>((rng() >> 11) * 0x1.0p-53 - 0.5);
    return t;
}

void BM_Conv3x3(benchmark::State& state) {
    const int64_t c = state.range(0);
    const hazelab::Tensor x = random_tensor({1, c, 64, 64}, 1);
    const hazelab::Tensor w = random_tensor({c, c, 3, 3}, 2);
    const hazelab::Tensor b = random_tensor({c}, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(hazelab::conv2d(x, w, b, 1, 1));
    }
}
BENCHMARK(BM_Conv3x3)->Arg(16)->Arg(32);

// one transformer block step: retained cache, window attention, fresh append
void BM_WindowAttentionCached(benchmark::State& state) {
    const int64_t d = 32, w = 8, windows = 16;
    const hazelab::Tensor q = random_tensor({windows, w * w, d}, 4);
    const hazelab::Tensor k = random_tensor({windows, w * w, d}, 5);
    const hazelab::Tensor v = random_tensor({windows, w * w, d}, 6);
    hazelab::KVCache cache(d, 0, 0.5);
    cache.append(random_tensor({w * w, d}, 7), random_tensor({w * w, d}, 8));
    cache.append(random_tensor({w * w, d}, 9), random_tensor({w * w, d}, 10));
    for (auto _ : state) {
        benchmark::DoNotOptimize(hazelab::cached_window_attention(q, k, v, cache, {}));
    }
}
BENCHMARK(BM_WindowAttentionCached);

void BM_CacheUpdate(benchmark::State& state) {
    const int64_t d = 32, chunk = 64;
    for (auto _ : state) {
        state.PauseTiming();
        hazelab::KVCache cache(d, 0, 0.5);
        cache.append(random_tensor({chunk, d}, 11), random_tensor({chunk, d}, 12));
        state.ResumeTiming();
        for (int i = 0; i < 16; ++i)
            cache.update(random_tensor({chunk, d}, 13), random_tensor({chunk, d}, 14), 1.0f);
        benchmark::DoNotOptimize(cache.size());
    }
}
BENCHMARK(BM_CacheUpdate);

void BM_DehazeSmall(benchmark::State& state) {
    hazelab::ModelConfig cfg;
    cfg.channels = 8;
    cfg.depths = {1, 1, 1, 1};
    cfg.estimator_hidden = 4;
    cfg.feature_dim = 8;
    cfg.validate();
    hazelab::DehazeModel model(cfg, hazelab::init_weights(cfg));
    const hazelab::Tensor image = random_tensor({1, 3, 64, 64}, 15);
    for (auto _ : state) {
        model.reset_caches();
        benchmark::DoNotOptimize(model.dehaze(image));
    }
}
BENCHMARK(BM_DehazeSmall);

}  // namespace

BENCHMARK_MAIN();
