#include <doctest.h>

#include <cmath>
#include <cstring>

#include "hazelab/config.hpp"
#include "hazelab/model.hpp"
#include "hazelab/pa_stb.hpp"
#include "oracles.hpp"

using namespace hazelab;

namespace {

ModelConfig small_cfg(uint64_t seed) {
    ModelConfig cfg;
    cfg.channels = 4;
    cfg.depths = {1, 1, 1, 1};
    cfg.estimator_hidden = 2;
    cfg.feature_dim = 4;
    cfg.seed = seed;
    return cfg;
}

AtmosphericParams fake_atm(int64_t c, oracle::Rng& rng) {
    AtmosphericParams atm;
    atm.r = oracle::random_tensor(rng, {c}, 0.5, 2.0);
    atm.b = oracle::random_tensor(rng, {c}, -0.5, 0.5);
    atm.c_a = 0.6f;
    atm.dark_channel = oracle::random_tensor(rng, {1, 1, 4, 4}, 0.0, 1.0);
    atm.transmission = oracle::random_tensor(rng, {1, 1, 4, 4}, 0.3, 1.0);
    atm.atmospheric_light = {0.9f, 0.9f, 0.9f};
    return atm;
}

}  // namespace

TEST_CASE("project_channel_vector cycles and truncates") {
    Tensor v({3});
    v[0] = 1.f;
    v[1] = 2.f;
    v[2] = 3.f;
    const Tensor up = project_channel_vector(v, 7);
    REQUIRE(up.shape() == std::vector<int64_t>{7});
    const float want[7] = {1.f, 2.f, 3.f, 1.f, 2.f, 3.f, 1.f};
    for (int64_t i = 0; i < 7; ++i) CHECK(up[i] == want[i]);

    const Tensor down = project_channel_vector(v, 2);
    CHECK(down[0] == 1.f);
    CHECK(down[1] == 2.f);

    const Tensor same = project_channel_vector(v, 3);
    CHECK(std::memcmp(same.data(), v.data(), sizeof(float) * 3) == 0);
}

TEST_CASE("a zero-weight block is the identity") {
    const ModelConfig cfg = small_cfg(0);
    const ModelWeights w = bind_weights(cfg, zero_weights(cfg));
    const BlockParams& block = w.backbone.stages[0][0];

    oracle::Rng rng(501);
    const Tensor x = oracle::random_tensor(rng, {1, cfg.channels, 6, 6}, -1.0, 1.0);
    const AtmosphericParams atm = fake_atm(cfg.channels, rng);
    KVCache cache(cfg.channels, 0, 0.5);
    const Tensor y = pa_stb_forward(x, block, atm, cache);
    CHECK(std::memcmp(y.data(), x.data(), sizeof(float) * static_cast<size_t>(x.numel())) == 0);
}

TEST_CASE("block forward preserves extents and stays finite") {
    const ModelConfig cfg = small_cfg(502);
    const ModelWeights w = bind_weights(cfg, init_weights(cfg));
    const BlockParams& block = w.backbone.stages[0][0];

    oracle::Rng rng(503);
    const Tensor x = oracle::random_tensor(rng, {1, cfg.channels, 5, 7}, -1.0, 1.0);
    const AtmosphericParams atm = fake_atm(cfg.channels, rng);
    KVCache cache(cfg.channels, 0, 0.5);
    BlockTrace trace;
    const Tensor y = pa_stb_forward(x, block, atm, cache, {}, 1e-5, &trace);
    REQUIRE(y.shape() == x.shape());
    CHECK(all_finite(y));
    CHECK(trace.w_base == 1);  // min(5,7)/8 floors to 0, floored to 1
    CHECK(trace.w_adapt == 1);
}

TEST_CASE("the block appends one pooled chunk per call") {
    const ModelConfig cfg = small_cfg(504);
    const ModelWeights w = bind_weights(cfg, init_weights(cfg));
    const BlockParams& block = w.backbone.stages[0][0];

    oracle::Rng rng(505);
    const Tensor x = oracle::random_tensor(rng, {1, cfg.channels, 16, 16}, -1.0, 1.0);
    const AtmosphericParams atm = fake_atm(cfg.channels, rng);
    KVCache cache(cfg.channels, 0, 0.5);

    (void)pa_stb_forward(x, block, atm, cache);
    const int64_t w_adapt = 2;  // 16/8
    CHECK(cache.size() == w_adapt * w_adapt);
    CHECK(cache.chunk_len() == w_adapt * w_adapt);
    REQUIRE(cache.history().size() == 1);

    (void)pa_stb_forward(x, block, atm, cache);
    REQUIRE(cache.history().size() == 2);
    const CacheUpdate& u = cache.history().back();
    // retention ran before the append; c_a_mean = 0.6, eta = 0.5
    CHECK(u.gamma == doctest::Approx(0.7));
    CHECK(u.kept == static_cast<int64_t>(std::floor(0.7 * 4.0)));
    CHECK(u.appended == 4);
}

TEST_CASE("a second call with a different window still appends on-convention") {
    const ModelConfig cfg = small_cfg(506);
    const ModelWeights w = bind_weights(cfg, init_weights(cfg));
    const BlockParams& block = w.backbone.stages[0][0];

    oracle::Rng rng(507);
    const AtmosphericParams atm = fake_atm(cfg.channels, rng);
    KVCache cache(cfg.channels, 0, 0.5);

    const Tensor x16 = oracle::random_tensor(rng, {1, cfg.channels, 16, 16}, -1.0, 1.0);
    (void)pa_stb_forward(x16, block, atm, cache);
    CHECK(cache.chunk_len() == 4);

    const Tensor x32 = oracle::random_tensor(rng, {1, cfg.channels, 32, 32}, -1.0, 1.0);
    (void)pa_stb_forward(x32, block, atm, cache);  // window 4 -> 16 tokens, resampled to 4
    CHECK(cache.history().back().appended == 4);
    CHECK(cache.size() == cache.history().back().len_after);
    CHECK(all_finite(cache.keys()));
}

TEST_CASE("dehaze emits one trace per block and keeps the input extents") {
    const ModelConfig cfg = small_cfg(508);
    oracle::Rng rng(509);
    DehazeModel model(cfg, init_weights(cfg));
    const Tensor x = oracle::random_tensor(rng, {1, 3, 32, 32}, 0.0, 1.0);
    const DehazeResult res = model.dehaze(x);
    REQUIRE(res.j_hat.shape() == x.shape());
    CHECK(static_cast<int64_t>(res.traces.size()) == backbone_block_count(cfg.backbone_config()));
    CHECK(all_finite(res.j_hat));
}

TEST_CASE("backbone pads odd extents up to multiples of sixteen") {
    const ModelConfig cfg = small_cfg(510);
    DehazeModel model(cfg, init_weights(cfg));
    oracle::Rng rng(511);
    const Tensor x = oracle::random_tensor(rng, {1, 3, 18, 9}, 0.0, 1.0);
    const DehazeResult res = model.dehaze(x);
    REQUIRE(res.j_hat.shape() == x.shape());
    CHECK(all_finite(res.j_hat));
}

TEST_CASE("backbone channel widths double per stage") {
    BackboneConfig bc;
    bc.base_channels = 4;
    bc.depths = {1, 1, 1, 1};
    CHECK(backbone_out_channels(bc) == 32);
    CHECK(backbone_block_count(bc) == 4);
    bc.depths = {2, 2, 2, 2};
    CHECK(backbone_block_count(bc) == 8);
}
