#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>

#include "hazelab/attribution.hpp"
#include "hazelab/errors.hpp"
#include "hazelab/haze_physics.hpp"
#include "hazelab/model.hpp"
#include "oracles.hpp"

using namespace hazelab;

namespace {

ModelConfig tiny_cfg(uint64_t seed) {
    ModelConfig cfg;
    cfg.channels = 4;
    cfg.depths = {1, 1, 1, 1};
    cfg.estimator_hidden = 2;
    cfg.feature_dim = 4;
    cfg.seed = seed;
    return cfg;
}

Tensor smooth_image(int64_t h, int64_t w) {
    Tensor img({1, 3, h, w});
    for (int64_t c = 0; c < 3; ++c)
        for (int64_t y = 0; y < h; ++y)
            for (int64_t x = 0; x < w; ++x)
                img.at(0, c, y, x) = static_cast<float>(
                    0.3 + 0.1 * static_cast<double>(c) +
                    0.3 * static_cast<double>(y) / static_cast<double>(h) +
                    0.2 * static_cast<double>(x) / static_cast<double>(w));
    return img;
}

}  // namespace

TEST_CASE("path endpoints are reproduced bitwise") {
    oracle::Rng rng(801);
    const Tensor baseline = oracle::random_tensor(rng, {1, 3, 4, 4}, 0.0, 1.0);
    const Tensor image = oracle::random_tensor(rng, {1, 3, 4, 4}, 0.0, 1.0);
    const Tensor p0 = path_point(baseline, image, 0.0);
    const Tensor p1 = path_point(baseline, image, 1.0);
    CHECK(std::memcmp(p0.data(), baseline.data(), sizeof(float) * 48) == 0);
    CHECK(std::memcmp(p1.data(), image.data(), sizeof(float) * 48) == 0);

    const Tensor mid = path_point(baseline, image, 0.5);
    for (int64_t i = 0; i < 48; ++i)
        CHECK(mid[i] == doctest::Approx(0.5 * (baseline[i] + image[i])).epsilon(1e-6));
}

TEST_CASE("grad_fd is exact on quadratics and linear maps") {
    oracle::Rng rng(802);
    const Tensor x = oracle::random_tensor(rng, {1, 3, 3, 3}, -1.0, 1.0);
    const Tensor a = oracle::random_tensor(rng, {1, 3, 3, 3}, -2.0, 2.0);

    auto quadratic = [&a](const Tensor& v) {
        double acc = 0.0;
        for (int64_t i = 0; i < v.numel(); ++i)
            acc += static_cast<double>(a[i]) * static_cast<double>(v[i]) * static_cast<double>(v[i]);
        return acc;
    };
    const Tensor gq = grad_fd(quadratic, x, 1e-3);
    for (int64_t i = 0; i < x.numel(); ++i)
        CHECK(std::abs(gq[i] - 2.0 * static_cast<double>(a[i]) * static_cast<double>(x[i])) < 1e-6);

    auto linear = [&a](const Tensor& v) {
        double acc = 0.0;
        for (int64_t i = 0; i < v.numel(); ++i)
            acc += static_cast<double>(a[i]) * static_cast<double>(v[i]);
        return acc;
    };
    const Tensor gl = grad_fd(linear, x, 1e-4);
    for (int64_t i = 0; i < x.numel(); ++i)
        CHECK(std::abs(gl[i] - static_cast<double>(a[i])) < 1e-6);
}

TEST_CASE("grad_fd leaves the probe tensor unchanged") {
    oracle::Rng rng(803);
    const Tensor x = oracle::random_tensor(rng, {1, 3, 2, 2}, -1.0, 1.0);
    Tensor copy = x;
    auto f = [](const Tensor& v) {
        double acc = 0.0;
        for (int64_t i = 0; i < v.numel(); ++i) acc += v[i];
        return acc;
    };
    (void)grad_fd(f, copy, 1e-3);
    CHECK(std::memcmp(copy.data(), x.data(), sizeof(float) * static_cast<size_t>(x.numel())) == 0);
}

TEST_CASE("grad_fd names the element when the functional goes non-finite") {
    Tensor x({1, 1, 2, 2});
    x[0] = 0.5f;
    auto f = [](const Tensor& v) {
        // blows up when element 3 moves
        if (v[3] != 0.f) return std::numeric_limits<double>::quiet_NaN();
        return static_cast<double>(v[0]);
    };
    try {
        (void)grad_fd(f, x, 1e-3);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("y=1") != std::string::npos);
        CHECK(msg.find("x=1") != std::string::npos);
    }
}

TEST_CASE("baseline blends atmospheric light with recovered reflectance") {
    const ModelConfig cfg = tiny_cfg(804);
    DehazeModel model(cfg, init_weights(cfg));
    const Tensor img = smooth_image(8, 8);
    const AtmosphericParams atm = model.estimate_params(img);

    PathConfig p;
    const Tensor base = make_baseline(img, atm, p);
    REQUIRE(base.shape() == img.shape());
    for (int64_t i = 0; i < base.numel(); ++i) {
        CHECK(base[i] >= 0.f);
        CHECK(base[i] <= 1.f);
    }

    // hand recomputation
    const Tensor r = estimate_scene_reflectance(img, atm.transmission, atm.atmospheric_light,
                                                static_cast<float>(p.t_min));
    double worst = 0.0;
    for (int64_t c = 0; c < 3; ++c)
        for (int64_t i = 0; i < 64; ++i) {
            const double want = std::clamp(
                static_cast<double>(atm.atmospheric_light[static_cast<size_t>(c)]) * (1.0 - p.t_mid) +
                    static_cast<double>(r[c * 64 + i]) * p.t_mid,
                0.0, 1.0);
            worst = std::max(worst, std::abs(static_cast<double>(base[c * 64 + i]) - want));
        }
    CHECK(worst < 1e-6);

    // raw mode drops the t_mid factor on the reflectance term
    PathConfig praw = p;
    praw.raw_baseline = true;
    const Tensor raw = make_baseline(img, atm, praw);
    double worst_raw = 0.0;
    for (int64_t c = 0; c < 3; ++c)
        for (int64_t i = 0; i < 64; ++i) {
            const double want = std::clamp(
                static_cast<double>(atm.atmospheric_light[static_cast<size_t>(c)]) * (1.0 - p.t_mid) +
                    static_cast<double>(r[c * 64 + i]),
                0.0, 1.0);
            worst_raw = std::max(worst_raw, std::abs(static_cast<double>(raw[c * 64 + i]) - want));
        }
    CHECK(worst_raw < 1e-6);
}

TEST_CASE("losses are nonnegative and vanish at their references") {
    const ModelConfig cfg = tiny_cfg(805);
    DehazeModel model(cfg, init_weights(cfg));
    const Tensor img = smooth_image(8, 8);

    const Tensor t_ref = model.estimate_params(img).transmission;
    CHECK(loss_phy(img, model, t_ref) == doctest::Approx(0.0).epsilon(1e-9));

    model.reset_caches();
    const Tensor j_ref = model.dehaze(img).j_hat;
    CHECK(loss_feat(img, model, j_ref) == doctest::Approx(0.0).epsilon(1e-9));

    Tensor other(img.shape());
    for (int64_t i = 0; i < img.numel(); ++i) other[i] = 1.f - img[i];
    CHECK(loss_phy(other, model, t_ref) > 0.0);
    CHECK(loss_feat(other, model, j_ref) > 0.0);
}

TEST_CASE("lambda zero produces an identically zero map") {
    const ModelConfig cfg = tiny_cfg(806);
    DehazeModel model(cfg, init_weights(cfg));
    const Tensor img = smooth_image(6, 6);
    PathConfig p;
    p.steps = 2;
    p.lambda = 0.0;
    const AttributionMap m = paam(model, img, p);
    REQUIRE(m.map.shape() == std::vector<int64_t>{1, 1, 6, 6});
    for (int64_t i = 0; i < m.map.numel(); ++i) CHECK(m.map[i] == 0.f);
    CHECK(m.steps == 2);
}

TEST_CASE("attribution rejects oversized inputs and bad configs") {
    const ModelConfig cfg = tiny_cfg(807);
    DehazeModel model(cfg, init_weights(cfg));
    oracle::Rng rng(808);
    const Tensor big = oracle::random_tensor(rng, {1, 3, 33, 33}, 0.0, 1.0);
    PathConfig p;
    p.steps = 2;
    CHECK_THROWS_AS((void)paam(model, big, p), ValidationError);

    PathConfig bad;
    bad.steps = 1;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = PathConfig{};
    bad.fd_epsilon = 1.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = PathConfig{};
    bad.t_mid = 0.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("the map scales exactly with lambda") {
    const ModelConfig cfg = tiny_cfg(809);
    DehazeModel model(cfg, init_weights(cfg));
    const Tensor img = smooth_image(6, 6);
    PathConfig p;
    p.steps = 2;
    p.lambda = 0.5;
    const AttributionMap a = paam(model, img, p);
    p.lambda = 1.0;
    const AttributionMap b = paam(model, img, p);
    double worst = 0.0;
    for (int64_t i = 0; i < a.map.numel(); ++i)
        worst = std::max(worst, std::abs(static_cast<double>(b.map[i]) -
                                         2.0 * static_cast<double>(a.map[i])));
    CHECK(worst < 1e-6);
    CHECK(a.baseline_checksum == b.baseline_checksum);  // same model, same baseline
}
