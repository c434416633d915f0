#include <doctest.h>

#include <cmath>
#include <cstring>

#include "hazelab/config.hpp"
#include "hazelab/estimator.hpp"
#include "hazelab/model.hpp"
#include "oracles.hpp"

using namespace hazelab;

namespace {

EstimatorWeights seeded_estimator(int64_t channels, uint64_t seed) {
    ModelConfig cfg;
    cfg.channels = channels;
    cfg.depths = {1, 1, 1, 1};
    cfg.estimator_hidden = 4;
    cfg.feature_dim = 8;
    cfg.seed = seed;
    return bind_weights(cfg, init_weights(cfg)).estimator;
}

}  // namespace

TEST_CASE("dark channel prediction is a sigmoid map over the input extents") {
    const EstimatorWeights w = seeded_estimator(8, 301);
    oracle::Rng rng(302);
    const Tensor img = oracle::random_tensor(rng, {1, 3, 10, 12}, 0.0, 1.0);
    const Tensor d = dark_channel_net(img, w);
    REQUIRE(d.shape() == std::vector<int64_t>{1, 1, 10, 12});
    for (int64_t i = 0; i < d.numel(); ++i) {
        CHECK(d[i] > 0.f);
        CHECK(d[i] < 1.f);
    }
}

TEST_CASE("atmospheric light averages the brightest dark-channel pixels") {
    Tensor img({1, 3, 2, 2});
    // pixel (1,1) carries RGB (0.9, 0.6, 0.3)
    img.at(0, 0, 1, 1) = 0.9f;
    img.at(0, 1, 1, 1) = 0.6f;
    img.at(0, 2, 1, 1) = 0.3f;
    Tensor dark({1, 1, 2, 2});
    dark[0] = 0.1f;
    dark[1] = 0.2f;
    dark[2] = 0.3f;
    dark[3] = 0.9f;  // unique maximum at (1,1)
    const auto a = estimate_atmospheric_light(img, dark, 0.999);
    CHECK(a[0] == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(a[1] == doctest::Approx(0.6).epsilon(1e-6));
    CHECK(a[2] == doctest::Approx(0.3).epsilon(1e-6));
}

TEST_CASE("tied quantile pixels are averaged") {
    Tensor img({1, 3, 1, 2});
    img.at(0, 0, 0, 0) = 1.0f;
    img.at(0, 0, 0, 1) = 0.0f;
    img.at(0, 1, 0, 0) = 0.0f;
    img.at(0, 1, 0, 1) = 1.0f;
    Tensor dark = Tensor::full({1, 1, 1, 2}, 0.7f);  // both pixels reach the threshold
    const auto a = estimate_atmospheric_light(img, dark, 0.999);
    CHECK(a[0] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(a[1] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(a[2] == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("physical factors respect their activation ranges") {
    const int64_t c = 8;
    const EstimatorWeights w = seeded_estimator(c, 303);
    oracle::Rng rng(304);
    const Tensor img = oracle::random_tensor(rng, {1, 3, 9, 9}, 0.0, 1.0);
    const AtmosphericParams atm = estimate(img, w);
    REQUIRE(atm.r.shape() == std::vector<int64_t>{c});
    REQUIRE(atm.b.shape() == std::vector<int64_t>{c});
    for (int64_t i = 0; i < c; ++i) {
        CHECK(atm.r[i] > 0.f);
        CHECK(atm.b[i] > -1.f);
        CHECK(atm.b[i] < 1.f);
    }
    CHECK(atm.c_a > 0.f);
    CHECK(atm.c_a < 1.f);
}

TEST_CASE("transmission is one minus the attenuated dark channel") {
    const EstimatorWeights w = seeded_estimator(8, 305);
    oracle::Rng rng(306);
    const Tensor img = oracle::random_tensor(rng, {1, 3, 7, 11}, 0.0, 1.0);
    const AtmosphericParams atm = estimate(img, w);
    REQUIRE(atm.transmission.same_extents(atm.dark_channel));
    double worst = 0.0;
    for (int64_t i = 0; i < atm.transmission.numel(); ++i) {
        const double want = 1.0 - static_cast<double>(atm.c_a) * static_cast<double>(atm.dark_channel[i]);
        worst = std::max(worst, std::abs(static_cast<double>(atm.transmission[i]) - want));
        CHECK(atm.transmission[i] > 0.f);
        CHECK(atm.transmission[i] <= 1.f);
    }
    CHECK(worst < 1e-6);

    const Tensor direct = transmission_map(atm.dark_channel, atm.c_a);
    CHECK(std::memcmp(direct.data(), atm.transmission.data(),
                      sizeof(float) * static_cast<size_t>(direct.numel())) == 0);
}

TEST_CASE("per-pixel attenuation variant matches the scalar one on constant maps") {
    const EstimatorWeights w = seeded_estimator(8, 307);
    oracle::Rng rng(308);
    const Tensor dark = oracle::random_tensor(rng, {1, 1, 5, 5}, 0.0, 1.0);
    const float ca = 0.37f;
    const Tensor map = Tensor::full({1, 1, 5, 5}, ca);
    CHECK(oracle::max_abs_diff(transmission_map(dark, ca), transmission_map(dark, map)) == 0.0);
}

TEST_CASE("fused descriptor length follows the config") {
    const EstimatorWeights w = seeded_estimator(8, 309);
    oracle::Rng rng(310);
    const Tensor img = oracle::random_tensor(rng, {1, 3, 8, 8}, 0.0, 1.0);
    const Tensor dark = dark_channel_net(img, w);
    const Tensor f = fuse_features(img, dark, w);
    REQUIRE(f.rank() == 1);
    CHECK(f.extent(0) == 8);
}

TEST_CASE("estimation is deterministic") {
    const EstimatorWeights w = seeded_estimator(8, 311);
    oracle::Rng rng(312);
    const Tensor img = oracle::random_tensor(rng, {1, 3, 6, 6}, 0.0, 1.0);
    const AtmosphericParams a1 = estimate(img, w);
    const AtmosphericParams a2 = estimate(img, w);
    CHECK(std::memcmp(a1.transmission.data(), a2.transmission.data(),
                      sizeof(float) * static_cast<size_t>(a1.transmission.numel())) == 0);
    CHECK(a1.c_a == a2.c_a);
    CHECK(a1.atmospheric_light == a2.atmospheric_light);
}
