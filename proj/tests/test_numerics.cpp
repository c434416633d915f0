#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "hazelab/ops.hpp"
#include "oracles.hpp"

using namespace hazelab;

TEST_CASE("conv2d matches the nested-loop reference") {
    oracle::Rng rng(101);
    for (int iter = 0; iter < 30; ++iter) {
        const int64_t ci = 1 + rng.index(4), co = 1 + rng.index(4);
        const int64_t k = 1 + 2 * rng.index(3);  // 1, 3, 5
        const int64_t h = k + rng.index(6), w = k + rng.index(6);
        const int64_t stride = 1 + rng.index(2);
        const int64_t padding = rng.index(3);
        if (h + 2 * padding < k || w + 2 * padding < k) continue;
        const Tensor x = oracle::random_tensor(rng, {1, ci, h, w}, -1.0, 1.0);
        const Tensor kernel = oracle::random_tensor(rng, {co, ci, k, k}, -1.0, 1.0);
        const Tensor bias = oracle::random_tensor(rng, {co}, -1.0, 1.0);
        const Tensor got = conv2d(x, kernel, bias, stride, padding);
        const Tensor want = oracle::conv2d(x, kernel, bias, stride, padding);
        REQUIRE(got.shape() == want.shape());
        CHECK(oracle::max_abs_diff(got, want) < 1e-6);
    }
}

TEST_CASE("conv2d without bias treats it as zero") {
    oracle::Rng rng(102);
    const Tensor x = oracle::random_tensor(rng, {1, 2, 5, 5}, -1.0, 1.0);
    const Tensor k = oracle::random_tensor(rng, {3, 2, 3, 3}, -1.0, 1.0);
    const Tensor got = conv2d(x, k, Tensor{}, 1, 1);
    const Tensor want = oracle::conv2d(x, k, Tensor({3}), 1, 1);
    CHECK(oracle::max_abs_diff(got, want) == 0.0);
}

TEST_CASE("depthwise_conv2d matches the per-channel reference") {
    oracle::Rng rng(103);
    for (int iter = 0; iter < 20; ++iter) {
        const int64_t c = 1 + rng.index(5);
        const int64_t h = 3 + rng.index(6), w = 3 + rng.index(6);
        const Tensor x = oracle::random_tensor(rng, {1, c, h, w}, -1.0, 1.0);
        const Tensor k = oracle::random_tensor(rng, {c, 1, 3, 3}, -1.0, 1.0);
        const Tensor got = depthwise_conv2d(x, k, 1);
        const Tensor want = oracle::depthwise_conv2d(x, k, 1);
        REQUIRE(got.shape() == want.shape());
        CHECK(oracle::max_abs_diff(got, want) < 1e-6);
    }
}

TEST_CASE("bilinear_resize reproduces affine ramps exactly") {
    // bilinear interpolation is exact on functions linear in x and y
    const int64_t h = 5, w = 7;
    Tensor x({1, 1, h, w});
    for (int64_t y = 0; y < h; ++y)
        for (int64_t z = 0; z < w; ++z)
            x.at(0, 0, y, z) = static_cast<float>(0.125 * static_cast<double>(y) +
                                                  0.0625 * static_cast<double>(z) + 0.25);
    const Tensor up = bilinear_resize(x, 9, 13, true);
    double worst = 0.0;
    for (int64_t y = 0; y < 9; ++y)
        for (int64_t z = 0; z < 13; ++z) {
            const double sy = static_cast<double>(y) * (h - 1) / 8.0;
            const double sx = static_cast<double>(z) * (w - 1) / 12.0;
            const double want = 0.125 * sy + 0.0625 * sx + 0.25;
            worst = std::max(worst, std::abs(static_cast<double>(up.at(0, 0, y, z)) - want));
        }
    CHECK(worst < 1e-6);
}

TEST_CASE("bilinear_resize at the same size is the identity") {
    oracle::Rng rng(104);
    const Tensor x = oracle::random_tensor(rng, {1, 3, 6, 4}, 0.0, 1.0);
    for (bool corners : {false, true}) {
        const Tensor y = bilinear_resize(x, 6, 4, corners);
        CHECK(oracle::max_abs_diff(x, y) == 0.0);
    }
}

TEST_CASE("layer_norm output has zero mean and unit variance before affine") {
    oracle::Rng rng(105);
    const int64_t c = 8;
    const Tensor x = oracle::random_tensor(rng, {2, c, 3, 3}, -2.0, 2.0);
    const Tensor gamma = Tensor::full({c}, 1.f);
    const Tensor beta({c});
    const Tensor y = layer_norm(x, gamma, beta, 1e-8);
    for (int64_t b = 0; b < 2; ++b)
        for (int64_t yy = 0; yy < 3; ++yy)
            for (int64_t xx = 0; xx < 3; ++xx) {
                double m = 0.0, ss = 0.0;
                for (int64_t ch = 0; ch < c; ++ch) {
                    m += y.at(b, ch, yy, xx);
                    ss += static_cast<double>(y.at(b, ch, yy, xx)) * y.at(b, ch, yy, xx);
                }
                m /= c;
                CHECK(std::abs(m) < 1e-6);
                CHECK(std::abs(ss / c - m * m - 1.0) < 1e-4);
            }
}

TEST_CASE("layer_norm applies gamma and beta per channel") {
    Tensor x({1, 2, 1, 1});
    x.at(0, 0, 0, 0) = 1.f;
    x.at(0, 1, 0, 0) = 3.f;
    Tensor gamma({2}), beta({2});
    gamma[0] = 2.f;
    gamma[1] = 0.5f;
    beta[0] = 1.f;
    beta[1] = -1.f;
    // normalized values are -1 and +1
    const Tensor y = layer_norm(x, gamma, beta, 1e-12);
    CHECK(y.at(0, 0, 0, 0) == doctest::Approx(-1.0).epsilon(1e-5));
    CHECK(y.at(0, 1, 0, 0) == doctest::Approx(-0.5).epsilon(1e-5));
}

TEST_CASE("softmax_lastdim rows are positive and sum to one") {
    oracle::Rng rng(106);
    const Tensor x = oracle::random_tensor(rng, {3, 7}, -30.0, 30.0);
    const Tensor y = softmax_lastdim(x);
    for (int64_t i = 0; i < 3; ++i) {
        double sum = 0.0;
        for (int64_t j = 0; j < 7; ++j) {
            CHECK(y.at(i, j) > 0.f);
            sum += y.at(i, j);
        }
        CHECK(std::abs(sum - 1.0) < 1e-6);
    }
}

TEST_CASE("softmax_lastdim is shift invariant") {
    oracle::Rng rng(107);
    const Tensor x = oracle::random_tensor(rng, {2, 5}, -1.0, 1.0);
    Tensor shifted(x.shape());
    for (int64_t i = 0; i < x.numel(); ++i) shifted[i] = x[i] + 100.f;
    CHECK(oracle::max_abs_diff(softmax_lastdim(x), softmax_lastdim(shifted)) < 1e-6);
}

TEST_CASE("quantile uses the nearest-rank convention") {
    Tensor v({5});
    // unsorted on purpose
    v[0] = 0.5f;
    v[1] = 0.1f;
    v[2] = 0.9f;
    v[3] = 0.3f;
    v[4] = 0.7f;
    CHECK(quantile(v, 0.0) == 0.1f);   // rank clamps to the first element
    CHECK(quantile(v, 0.2) == 0.1f);   // ceil(1.0) = 1
    CHECK(quantile(v, 0.21) == 0.3f);  // ceil(1.05) = 2
    CHECK(quantile(v, 0.5) == 0.5f);   // ceil(2.5) = 3
    CHECK(quantile(v, 1.0) == 0.9f);
    Tensor one({1});
    one[0] = 0.42f;
    CHECK(quantile(one, 0.999) == 0.42f);
}

TEST_CASE("global_avg_pool averages each channel plane") {
    Tensor x({1, 2, 2, 2});
    for (int64_t i = 0; i < 4; ++i) x[i] = static_cast<float>(i);       // mean 1.5
    for (int64_t i = 4; i < 8; ++i) x[i] = static_cast<float>(2 * i);   // 8,10,12,14 mean 11
    const Tensor y = global_avg_pool(x);
    REQUIRE(y.shape() == std::vector<int64_t>{1, 2, 1, 1});
    CHECK(y[0] == doctest::Approx(1.5));
    CHECK(y[1] == doctest::Approx(11.0));
}

TEST_CASE("activations match their closed forms") {
    oracle::Rng rng(108);
    const Tensor x = oracle::random_tensor(rng, {64}, -4.0, 4.0);
    const Tensor s = sigmoid(x), r = relu(x), l = leaky_relu(x, 0.01f), t = tanh(x),
                 p = softplus(x);
    for (int64_t i = 0; i < 64; ++i) {
        const double v = x[i];
        CHECK(std::abs(s[i] - 1.0 / (1.0 + std::exp(-v))) < 1e-6);
        CHECK(r[i] == (v > 0 ? x[i] : 0.f));
        CHECK(std::abs(l[i] - (v > 0 ? v : 0.01 * v)) < 1e-6);
        CHECK(std::abs(t[i] - std::tanh(v)) < 1e-6);
        CHECK(std::abs(p[i] - std::log1p(std::exp(v))) < 1e-6);
        CHECK(p[i] > 0.f);  // softplus stays strictly positive
    }
}

TEST_CASE("min_pool2d takes the window minimum with replicated edges") {
    Tensor x({1, 1, 3, 3});
    for (int64_t i = 0; i < 9; ++i) x[i] = static_cast<float>(i);
    const Tensor y = min_pool2d(x, 3);
    REQUIRE(y.shape() == x.shape());
    // center window covers everything; corners replicate edge values
    CHECK(y.at(0, 0, 1, 1) == 0.f);
    CHECK(y.at(0, 0, 0, 0) == 0.f);
    CHECK(y.at(0, 0, 2, 2) == 4.f);  // rows 1..2, cols 1..2 -> min is 4
}

TEST_CASE("matmul matches a triple loop") {
    oracle::Rng rng(109);
    const Tensor a = oracle::random_tensor(rng, {4, 6}, -1.0, 1.0);
    const Tensor b = oracle::random_tensor(rng, {6, 3}, -1.0, 1.0);
    const Tensor got = matmul(a, b);
    for (int64_t i = 0; i < 4; ++i)
        for (int64_t j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (int64_t k = 0; k < 6; ++k)
                acc += static_cast<double>(a.at(i, k)) * static_cast<double>(b.at(k, j));
            CHECK(std::abs(got.at(i, j) - acc) < 1e-6);
        }
}

TEST_CASE("elementwise helpers") {
    oracle::Rng rng(110);
    const Tensor a = oracle::random_tensor(rng, {10}, -2.0, 2.0);
    const Tensor b = oracle::random_tensor(rng, {10}, -2.0, 2.0);
    const Tensor sum = add(a, b), diff = sub(a, b), prod = mul(a, b), half = scale(a, 0.5f),
                 cl = clamp01(a);
    for (int64_t i = 0; i < 10; ++i) {
        CHECK(sum[i] == a[i] + b[i]);
        CHECK(diff[i] == a[i] - b[i]);
        CHECK(prod[i] == a[i] * b[i]);
        CHECK(half[i] == a[i] * 0.5f);
        CHECK(cl[i] == std::clamp(a[i], 0.f, 1.f));
    }
}

TEST_CASE("shape validation rejects mismatched operands") {
    Tensor a({2, 3}), b({3, 2});
    CHECK_THROWS_AS((void)add(a, b), std::invalid_argument);
    CHECK_THROWS_AS((void)matmul(a, a), std::invalid_argument);
    Tensor x({1, 2, 4, 4}), k({3, 5, 3, 3});
    CHECK_THROWS_AS((void)conv2d(x, k), std::invalid_argument);
}
