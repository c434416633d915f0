#include <doctest.h>

#include <cmath>
#include <limits>

#include "hazelab/metrics.hpp"
#include "oracles.hpp"

using namespace hazelab;

TEST_CASE("psnr closed-form cases") {
    const Tensor zero({1, 1, 8, 8});
    const Tensor tenth = Tensor::full({1, 1, 8, 8}, 0.1f);
    CHECK(std::abs(psnr(tenth, zero) - 20.0) < 1e-6);  // 10*log10(1/0.01)

    const Tensor half = Tensor::full({1, 1, 8, 8}, 0.5f);
    CHECK(std::abs(psnr(half, zero) - 10.0 * std::log10(4.0)) < 1e-5);

    CHECK(std::isinf(psnr(zero, zero)));
    CHECK(psnr(zero, zero) > 0);

    // peak rescaling shifts by 20*log10(peak)
    CHECK(std::abs(psnr(tenth, zero, 2.0) - (20.0 + 20.0 * std::log10(2.0))) < 1e-5);
}

TEST_CASE("psnr rejects mismatched extents") {
    CHECK_THROWS_AS((void)psnr(Tensor({1, 1, 2, 2}), Tensor({1, 1, 2, 3})), std::invalid_argument);
}

TEST_CASE("ssim of an image with itself is one") {
    oracle::Rng rng(701);
    const Tensor x = oracle::random_tensor(rng, {1, 3, 16, 16}, 0.0, 1.0);
    CHECK(std::abs(ssim(x, x) - 1.0) < 1e-6);
    CHECK(std::abs(ssim(x, x, true) - 1.0) < 1e-6);
}

TEST_CASE("ssim matches the direct 2-D window reference") {
    oracle::Rng rng(702);
    for (int iter = 0; iter < 5; ++iter) {
        const Tensor x = oracle::random_tensor(rng, {1, 3, 14, 17}, 0.0, 1.0);
        Tensor y(x.shape());
        for (int64_t i = 0; i < x.numel(); ++i)
            y[i] = static_cast<float>(
                std::clamp(x[i] + 0.15 * (rng.u01() - 0.5), 0.0, 1.0));
        CHECK(std::abs(ssim(x, y) - oracle::ssim_reference(x, y)) < 1e-9);
    }
}

TEST_CASE("ssim drops under distortion and stays in range") {
    oracle::Rng rng(703);
    const Tensor x = oracle::random_tensor(rng, {1, 1, 16, 16}, 0.2, 0.8);
    Tensor noisy(x.shape());
    for (int64_t i = 0; i < x.numel(); ++i)
        noisy[i] = static_cast<float>(std::clamp(x[i] + 0.3 * (rng.u01() - 0.5), 0.0, 1.0));
    const double s = ssim(x, noisy);
    CHECK(s < 1.0);
    CHECK(s > -1.0);
}

TEST_CASE("combined_loss is zero at the target and weighted elsewhere") {
    oracle::Rng rng(704);
    const Tensor x = oracle::random_tensor(rng, {1, 3, 16, 16}, 0.0, 1.0);
    CHECK(std::abs(combined_loss(x, x)) < 1e-7);

    const LossWeights defaults;
    CHECK(defaults.l1 == 0.8);
    CHECK(defaults.mse == 0.1);
    CHECK(defaults.ssim == 0.1);

    // constant offset: mean|d| = 0.1, mean d^2 = 0.01, plus the SSIM term
    const Tensor zero({1, 3, 16, 16});
    const Tensor tenth = Tensor::full({1, 3, 16, 16}, 0.1f);
    LossWeights no_ssim;
    no_ssim.ssim = 0.0;
    const double got = combined_loss(tenth, zero, no_ssim);
    CHECK(std::abs(got - (0.8 * 0.1 + 0.1 * 0.01)) < 1e-6);

    // the l1-only weighting scales linearly
    LossWeights l1_only;
    l1_only.l1 = 1.0;
    l1_only.mse = 0.0;
    l1_only.ssim = 0.0;
    CHECK(std::abs(combined_loss(tenth, zero, l1_only) - 0.1) < 1e-6);
}

TEST_CASE("per-channel ssim averages the channels") {
    oracle::Rng rng(705);
    Tensor x({1, 3, 16, 16});
    Tensor y({1, 3, 16, 16});
    // identical on two channels, distorted on one
    for (int64_t c = 0; c < 3; ++c)
        for (int64_t i = 0; i < 256; ++i) {
            const float v = static_cast<float>(rng.uniform(0.2, 0.8));
            x[c * 256 + i] = v;
            y[c * 256 + i] = c == 0 ? static_cast<float>(std::clamp(v + 0.2 * (rng.u01() - 0.5), 0.0, 1.0)) : v;
        }
    const double per = ssim(x, y, true);
    CHECK(per < 1.0);
    CHECK(per > 0.0);
}
