#include "hazelab/estimator.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "hazelab/ops.hpp"

namespace hazelab {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

void check_image(const Tensor& image, const char* who) {
    require(image.rank() == 4 && image.extent(1) == 3,
            std::string(who) + ": image must be (1, 3, H, W), got " + shape_string(image.shape()));
    require(image.extent(0) == 1, std::string(who) + ": batch extent must be 1, got " +
                                      std::to_string(image.extent(0)));
}

int64_t same_pad(const Tensor& kernel) {
    return (kernel.extent(2) - 1) / 2;
}

// y = W x + b with W (o, i), x rank-1 (i), b rank-1 (o)
Tensor affine(const Tensor& w, const Tensor& b, const Tensor& x) {
    require(w.rank() == 2, "affine: weight must be rank 2, got " + shape_string(w.shape()));
    require(x.rank() == 1 && x.extent(0) == w.extent(1),
            "affine: input length " + std::to_string(x.numel()) + " does not match weight columns " +
                std::to_string(w.extent(1)));
    require(b.rank() == 1 && b.extent(0) == w.extent(0),
            "affine: bias length " + std::to_string(b.numel()) + " does not match weight rows " +
                std::to_string(w.extent(0)));
    Tensor out({w.extent(0)});
    for (int64_t o = 0; o < w.extent(0); ++o) {
        double acc = static_cast<double>(b[o]);
        for (int64_t i = 0; i < w.extent(1); ++i)
            acc += static_cast<double>(w.at(o, i)) * static_cast<double>(x[i]);
        out[o] = static_cast<float>(acc);
    }
    return out;
}

}  // namespace

double AtmosphericParams::c_a_mean() const {
    if (c_a_map.numel() == 0) return static_cast<double>(c_a);
    double sum = 0.0;
    for (int64_t i = 0; i < c_a_map.numel(); ++i) sum += static_cast<double>(c_a_map[i]);
    return sum / static_cast<double>(c_a_map.numel());
}

Tensor dark_channel_net(const Tensor& image, const EstimatorWeights& w) {
    check_image(image, "dark_channel_net");
    require(w.dark_conv1_w.rank() == 4 && w.dark_conv1_w.extent(1) == 3,
            "dark_channel_net: conv1 kernel must take 3 channels, got " + shape_string(w.dark_conv1_w.shape()));
    require(w.dark_conv2_w.rank() == 4 && w.dark_conv2_w.extent(0) == 1 &&
                w.dark_conv2_w.extent(1) == w.dark_conv1_w.extent(0),
            "dark_channel_net: conv2 kernel must map hidden channels to 1, got " +
                shape_string(w.dark_conv2_w.shape()));
    Tensor h = conv2d(image, w.dark_conv1_w, w.dark_conv1_b, 1, same_pad(w.dark_conv1_w));
    h = relu(h);
    h = conv2d(h, w.dark_conv2_w, w.dark_conv2_b, 1, same_pad(w.dark_conv2_w));
    return sigmoid(h);
}

std::array<float, 3> estimate_atmospheric_light(const Tensor& image, const Tensor& dark, double q_a) {
    check_image(image, "estimate_atmospheric_light");
    require(dark.rank() == 4 && dark.extent(1) == 1 && dark.extent(2) == image.extent(2) &&
                dark.extent(3) == image.extent(3),
            "estimate_atmospheric_light: dark channel " + shape_string(dark.shape()) +
                " does not match image " + shape_string(image.shape()));
    const float threshold = quantile(dark, q_a);
    const int64_t h = image.extent(2), w = image.extent(3);
    double sum[3] = {0.0, 0.0, 0.0};
    int64_t count = 0;
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x) {
            if (dark.at(0, 0, y, x) < threshold) continue;
            ++count;
            for (int64_t c = 0; c < 3; ++c) sum[c] += static_cast<double>(image.at(0, c, y, x));
        }
    // the threshold is itself an element, so the selection is never empty
    std::array<float, 3> a{};
    for (int64_t c = 0; c < 3; ++c) a[static_cast<size_t>(c)] = static_cast<float>(sum[c] / count);
    return a;
}

Tensor fuse_features(const Tensor& image, const Tensor& dark, const EstimatorWeights& w) {
    check_image(image, "fuse_features");
    require(dark.rank() == 4 && dark.extent(1) == 1 && dark.extent(2) == image.extent(2) &&
                dark.extent(3) == image.extent(3),
            "fuse_features: dark channel " + shape_string(dark.shape()) + " does not match image " +
                shape_string(image.shape()));
    require(w.fuse_conv1_w.rank() == 4 && w.fuse_conv1_w.extent(1) == 4,
            "fuse_features: conv1 kernel must take 4 channels, got " + shape_string(w.fuse_conv1_w.shape()));

    const int64_t h = image.extent(2), ww = image.extent(3);
    Tensor cat({1, 4, h, ww});
    for (int64_t c = 0; c < 3; ++c)
        for (int64_t y = 0; y < h; ++y)
            for (int64_t x = 0; x < ww; ++x) cat.at(0, c, y, x) = image.at(0, c, y, x);
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < ww; ++x) cat.at(0, 3, y, x) = dark.at(0, 0, y, x);

    Tensor f = conv2d(cat, w.fuse_conv1_w, w.fuse_conv1_b, 1, same_pad(w.fuse_conv1_w));
    f = leaky_relu(f);
    f = conv2d(f, w.fuse_conv2_w, w.fuse_conv2_b, 1, same_pad(w.fuse_conv2_w));
    f = global_avg_pool(f);
    return Tensor({f.extent(1)}, f.values());
}

PhysicalFactors physical_mlp(const Tensor& f, const std::array<float, 3>& atmospheric_light,
                             const EstimatorWeights& w) {
    require(f.rank() == 1, "physical_mlp: feature vector must be rank 1, got " + shape_string(f.shape()));
    const int64_t d = f.extent(0);
    require(w.mlp_fc1_w.rank() == 2 && w.mlp_fc1_w.extent(1) == d + 3,
            "physical_mlp: fc1 expects input length " + std::to_string(w.mlp_fc1_w.extent(1)) +
                ", feature ++ A has length " + std::to_string(d + 3));
    const int64_t heads = w.mlp_head_w.extent(0);
    require(heads >= 3 && heads % 2 == 1,
            "physical_mlp: head width must be odd (2C + 1), got " + std::to_string(heads));

    Tensor x({d + 3});
    for (int64_t i = 0; i < d; ++i) x[i] = f[i];
    for (int64_t i = 0; i < 3; ++i) x[d + i] = atmospheric_light[static_cast<size_t>(i)];

    Tensor h = leaky_relu(affine(w.mlp_fc1_w, w.mlp_fc1_b, x));
    h = leaky_relu(affine(w.mlp_fc2_w, w.mlp_fc2_b, h));
    Tensor head = affine(w.mlp_head_w, w.mlp_head_b, h);

    const int64_t c = (heads - 1) / 2;
    PhysicalFactors out;
    out.r = softplus(Tensor({c}, std::vector<float>(head.data(), head.data() + c)));
    out.b = tanh(Tensor({c}, std::vector<float>(head.data() + c, head.data() + 2 * c)));
    out.c_a = static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(head[2 * c]))));
    return out;
}

Tensor transmission_map(const Tensor& dark, float c_a) {
    require(dark.rank() == 4 && dark.extent(1) == 1,
            "transmission_map: dark channel must be (N, 1, H, W), got " + shape_string(dark.shape()));
    require(c_a >= 0.f && c_a <= 1.f, "transmission_map: c_a must be in [0, 1], got " + std::to_string(c_a));
    Tensor out(dark.shape());
    for (int64_t i = 0; i < dark.numel(); ++i) out[i] = 1.f - c_a * dark[i];
    return out;
}

Tensor transmission_map(const Tensor& dark, const Tensor& c_a_map) {
    require(dark.rank() == 4 && dark.extent(1) == 1,
            "transmission_map: dark channel must be (N, 1, H, W), got " + shape_string(dark.shape()));
    require(c_a_map.same_extents(dark), "transmission_map: c_a map " + shape_string(c_a_map.shape()) +
                                            " does not match dark channel " + shape_string(dark.shape()));
    Tensor out(dark.shape());
    for (int64_t i = 0; i < dark.numel(); ++i) {
        require(c_a_map[i] >= 0.f && c_a_map[i] <= 1.f, "transmission_map: c_a values must be in [0, 1]");
        out[i] = 1.f - c_a_map[i] * dark[i];
    }
    return out;
}

AtmosphericParams estimate(const Tensor& image, const EstimatorWeights& w, double q_a) {
    check_image(image, "estimate");
    AtmosphericParams p;
    p.dark_channel = dark_channel_net(image, w);
    p.atmospheric_light = estimate_atmospheric_light(image, p.dark_channel, q_a);
    Tensor f = fuse_features(image, p.dark_channel, w);
    PhysicalFactors factors = physical_mlp(f, p.atmospheric_light, w);
    p.r = std::move(factors.r);
    p.b = std::move(factors.b);
    p.c_a = factors.c_a;
    p.transmission = transmission_map(p.dark_channel, p.c_a);
    return p;
}

}  // namespace hazelab
