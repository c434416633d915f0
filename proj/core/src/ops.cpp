#include "hazelab/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hazelab {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

void require_rank(const Tensor& t, int64_t r, const char* who, const char* what) {
    if (t.rank() != r)
        throw std::invalid_argument(std::string(who) + ": " + what + " must be rank " + std::to_string(r) +
                                    ", got shape " + shape_string(t.shape()));
}

void require_channel_vec(const Tensor& v, int64_t c, const char* who, const char* what) {
    if (v.rank() != 1 || v.extent(0) != c)
        throw std::invalid_argument(std::string(who) + ": " + what + " must have shape (" + std::to_string(c) +
                                    "), got " + shape_string(v.shape()));
}

Tensor map_unary(const Tensor& x, double (*fn)(double)) {
    Tensor out(x.shape());
    for (int64_t i = 0; i < x.numel(); ++i) out[i] = static_cast<float>(fn(static_cast<double>(x[i])));
    return out;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, int64_t stride,
              int64_t padding) {
    require_rank(input, 4, "conv2d", "input");
    require_rank(kernel, 4, "conv2d", "kernel");
    require(stride >= 1, "conv2d: stride must be >= 1, got " + std::to_string(stride));
    require(padding >= 0, "conv2d: padding must be >= 0, got " + std::to_string(padding));
    const int64_t n = input.extent(0), ci = input.extent(1), h = input.extent(2), w = input.extent(3);
    const int64_t co = kernel.extent(0), kci = kernel.extent(1), kh = kernel.extent(2), kw = kernel.extent(3);
    require(ci == kci, "conv2d: input channels (" + std::to_string(ci) + ") do not match kernel input channels (" +
                           std::to_string(kci) + ")");
    if (!bias.empty()) require_channel_vec(bias, co, "conv2d", "bias");
    const int64_t oh = (h + 2 * padding - kh) / stride + 1;
    const int64_t ow = (w + 2 * padding - kw) / stride + 1;
    require(kh >= 1 && kw >= 1, "conv2d: kernel extents must be positive, got " + shape_string(kernel.shape()));
    require(h + 2 * padding >= kh && w + 2 * padding >= kw,
            "conv2d: kernel " + std::to_string(kh) + "x" + std::to_string(kw) + " larger than padded input " +
                std::to_string(h + 2 * padding) + "x" + std::to_string(w + 2 * padding));

    Tensor out({n, co, oh, ow});
    for (int64_t b = 0; b < n; ++b)
        for (int64_t oc = 0; oc < co; ++oc)
            for (int64_t oy = 0; oy < oh; ++oy)
                for (int64_t ox = 0; ox < ow; ++ox) {
                    double acc = bias.empty() ? 0.0 : static_cast<double>(bias[oc]);
                    const int64_t y0 = oy * stride - padding;
                    const int64_t x0 = ox * stride - padding;
                    for (int64_t ic = 0; ic < ci; ++ic)
                        for (int64_t ky = 0; ky < kh; ++ky) {
                            const int64_t iy = y0 + ky;
                            if (iy < 0 || iy >= h) continue;
                            for (int64_t kx = 0; kx < kw; ++kx) {
                                const int64_t ix = x0 + kx;
                                if (ix < 0 || ix >= w) continue;
                                acc += static_cast<double>(input.at(b, ic, iy, ix)) *
                                       static_cast<double>(kernel.at(oc, ic, ky, kx));
                            }
                        }
                    out.at(b, oc, oy, ox) = static_cast<float>(acc);
                }
    return out;
}

Tensor depthwise_conv2d(const Tensor& input, const Tensor& kernel, int64_t padding) {
    require_rank(input, 4, "depthwise_conv2d", "input");
    require_rank(kernel, 4, "depthwise_conv2d", "kernel");
    require(padding >= 0, "depthwise_conv2d: padding must be >= 0, got " + std::to_string(padding));
    const int64_t n = input.extent(0), c = input.extent(1), h = input.extent(2), w = input.extent(3);
    require(kernel.extent(0) == c, "depthwise_conv2d: kernel count (" + std::to_string(kernel.extent(0)) +
                                       ") does not match input channels (" + std::to_string(c) + ")");
    require(kernel.extent(1) == 1, "depthwise_conv2d: kernel must have one input channel per filter, got " +
                                       shape_string(kernel.shape()));
    const int64_t kh = kernel.extent(2), kw = kernel.extent(3);
    require(h + 2 * padding >= kh && w + 2 * padding >= kw,
            "depthwise_conv2d: kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                " larger than padded input " + std::to_string(h + 2 * padding) + "x" +
                std::to_string(w + 2 * padding));
    const int64_t oh = h + 2 * padding - kh + 1;
    const int64_t ow = w + 2 * padding - kw + 1;

    Tensor out({n, c, oh, ow});
    for (int64_t b = 0; b < n; ++b)
        for (int64_t ch = 0; ch < c; ++ch)
            for (int64_t oy = 0; oy < oh; ++oy)
                for (int64_t ox = 0; ox < ow; ++ox) {
                    double acc = 0.0;
                    for (int64_t ky = 0; ky < kh; ++ky) {
                        const int64_t iy = oy - padding + ky;
                        if (iy < 0 || iy >= h) continue;
                        for (int64_t kx = 0; kx < kw; ++kx) {
                            const int64_t ix = ox - padding + kx;
                            if (ix < 0 || ix >= w) continue;
                            acc += static_cast<double>(input.at(b, ch, iy, ix)) *
                                   static_cast<double>(kernel.at(ch, 0, ky, kx));
                        }
                    }
                    out.at(b, ch, oy, ox) = static_cast<float>(acc);
                }
    return out;
}

Tensor bilinear_resize(const Tensor& input, int64_t out_h, int64_t out_w, bool align_corners) {
    require_rank(input, 4, "bilinear_resize", "input");
    require(out_h >= 1 && out_w >= 1, "bilinear_resize: output extents must be positive, got " +
                                          std::to_string(out_h) + "x" + std::to_string(out_w));
    const int64_t n = input.extent(0), c = input.extent(1), h = input.extent(2), w = input.extent(3);
    require(h >= 1 && w >= 1, "bilinear_resize: input spatial extents must be positive, got shape " +
                                  shape_string(input.shape()));
    if (out_h == h && out_w == w) return input;  // identity resize is bitwise

    auto src_coord = [align_corners](int64_t i, int64_t in_len, int64_t out_len) {
        if (align_corners) {
            if (out_len == 1) return 0.0;
            return static_cast<double>(i) * static_cast<double>(in_len - 1) / static_cast<double>(out_len - 1);
        }
        double s = (static_cast<double>(i) + 0.5) * static_cast<double>(in_len) / static_cast<double>(out_len) - 0.5;
        return std::min(std::max(s, 0.0), static_cast<double>(in_len - 1));
    };

    Tensor out({n, c, out_h, out_w});
    for (int64_t oy = 0; oy < out_h; ++oy) {
        const double sy = src_coord(oy, h, out_h);
        const int64_t y0 = static_cast<int64_t>(sy);
        const int64_t y1 = std::min(y0 + 1, h - 1);
        const double fy = sy - static_cast<double>(y0);
        for (int64_t ox = 0; ox < out_w; ++ox) {
            const double sx = src_coord(ox, w, out_w);
            const int64_t x0 = static_cast<int64_t>(sx);
            const int64_t x1 = std::min(x0 + 1, w - 1);
            const double fx = sx - static_cast<double>(x0);
            for (int64_t b = 0; b < n; ++b)
                for (int64_t ch = 0; ch < c; ++ch) {
                    const double v00 = input.at(b, ch, y0, x0);
                    const double v01 = input.at(b, ch, y0, x1);
                    const double v10 = input.at(b, ch, y1, x0);
                    const double v11 = input.at(b, ch, y1, x1);
                    const double top = v00 + (v01 - v00) * fx;
                    const double bot = v10 + (v11 - v10) * fx;
                    out.at(b, ch, oy, ox) = static_cast<float>(top + (bot - top) * fy);
                }
        }
    }
    return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    require_rank(x, 4, "layer_norm", "input");
    const int64_t n = x.extent(0), c = x.extent(1), h = x.extent(2), w = x.extent(3);
    require(c >= 1, "layer_norm: channel extent must be positive, got " + shape_string(x.shape()));
    require_channel_vec(gamma, c, "layer_norm", "gamma");
    require_channel_vec(beta, c, "layer_norm", "beta");
    require(eps > 0, "layer_norm: eps must be positive");

    Tensor out(x.shape());
    for (int64_t b = 0; b < n; ++b)
        for (int64_t y = 0; y < h; ++y)
            for (int64_t z = 0; z < w; ++z) {
                double sum = 0.0;
                for (int64_t ch = 0; ch < c; ++ch) sum += static_cast<double>(x.at(b, ch, y, z));
                const double mean = sum / static_cast<double>(c);
                double ss = 0.0;
                for (int64_t ch = 0; ch < c; ++ch) {
                    const double d = static_cast<double>(x.at(b, ch, y, z)) - mean;
                    ss += d * d;
                }
                const double inv = 1.0 / std::sqrt(ss / static_cast<double>(c) + eps);
                for (int64_t ch = 0; ch < c; ++ch) {
                    const double norm = (static_cast<double>(x.at(b, ch, y, z)) - mean) * inv;
                    out.at(b, ch, y, z) =
                        static_cast<float>(norm * static_cast<double>(gamma[ch]) + static_cast<double>(beta[ch]));
                }
            }
    return out;
}

Tensor softmax_lastdim(const Tensor& x) {
    require(x.rank() >= 1, "softmax_lastdim: input must have rank >= 1");
    const int64_t last = x.extent(x.rank() - 1);
    Tensor out(x.shape());
    if (last == 0 || x.numel() == 0) return out;
    const int64_t rows = x.numel() / last;
    for (int64_t r = 0; r < rows; ++r) {
        const float* in = x.data() + r * last;
        float* o = out.data() + r * last;
        float m = in[0];
        for (int64_t i = 1; i < last; ++i) m = std::max(m, in[i]);
        double sum = 0.0;
        for (int64_t i = 0; i < last; ++i) sum += std::exp(static_cast<double>(in[i]) - static_cast<double>(m));
        for (int64_t i = 0; i < last; ++i)
            o[i] = static_cast<float>(std::exp(static_cast<double>(in[i]) - static_cast<double>(m)) / sum);
    }
    return out;
}

float quantile(const Tensor& values, double q) {
    require(values.numel() >= 1, "quantile: input must be non-empty");
    require(std::isfinite(q) && q >= 0.0 && q <= 1.0, "quantile: q must be in [0, 1]");
    std::vector<float> v(values.data(), values.data() + values.numel());
    std::sort(v.begin(), v.end());
    const int64_t n = static_cast<int64_t>(v.size());
    int64_t rank = static_cast<int64_t>(std::ceil(q * static_cast<double>(n))) - 1;
    rank = std::min(std::max(rank, int64_t{0}), n - 1);
    return v[static_cast<size_t>(rank)];
}

Tensor global_avg_pool(const Tensor& x) {
    require_rank(x, 4, "global_avg_pool", "input");
    const int64_t n = x.extent(0), c = x.extent(1), h = x.extent(2), w = x.extent(3);
    require(h * w > 0, "global_avg_pool: zero spatial extent in shape " + shape_string(x.shape()));
    Tensor out({n, c, 1, 1});
    for (int64_t b = 0; b < n; ++b)
        for (int64_t ch = 0; ch < c; ++ch) {
            double sum = 0.0;
            for (int64_t y = 0; y < h; ++y)
                for (int64_t z = 0; z < w; ++z) sum += static_cast<double>(x.at(b, ch, y, z));
            out.at(b, ch, 0, 0) = static_cast<float>(sum / static_cast<double>(h * w));
        }
    return out;
}

Tensor sigmoid(const Tensor& x) {
    return map_unary(x, +[](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Tensor relu(const Tensor& x) {
    Tensor out(x.shape());
    for (int64_t i = 0; i < x.numel(); ++i) out[i] = x[i] > 0.f ? x[i] : 0.f;
    return out;
}

Tensor leaky_relu(const Tensor& x, float negative_slope) {
    Tensor out(x.shape());
    for (int64_t i = 0; i < x.numel(); ++i) out[i] = x[i] >= 0.f ? x[i] : negative_slope * x[i];
    return out;
}

Tensor tanh(const Tensor& x) {
    return map_unary(x, +[](double v) { return std::tanh(v); });
}

Tensor softplus(const Tensor& x) {
    return map_unary(x, +[](double v) { return v > 30.0 ? v : std::log1p(std::exp(v)); });
}

Tensor min_pool2d(const Tensor& x, int64_t window) {
    require_rank(x, 4, "min_pool2d", "input");
    require(window >= 1, "min_pool2d: window must be >= 1, got " + std::to_string(window));
    const int64_t n = x.extent(0), c = x.extent(1), h = x.extent(2), w = x.extent(3);
    require(h >= 1 && w >= 1, "min_pool2d: input spatial extents must be positive, got shape " +
                                  shape_string(x.shape()));
    require(!(window > h && window > w), "min_pool2d: window " + std::to_string(window) +
                                             " larger than both spatial extents " + std::to_string(h) + "x" +
                                             std::to_string(w));
    const int64_t r0 = (window - 1) / 2;  // window covers [i - r0, i - r0 + window)
    Tensor out(x.shape());
    for (int64_t b = 0; b < n; ++b)
        for (int64_t ch = 0; ch < c; ++ch)
            for (int64_t y = 0; y < h; ++y)
                for (int64_t z = 0; z < w; ++z) {
                    float m = x.at(b, ch, std::min(std::max(y - r0, int64_t{0}), h - 1),
                                   std::min(std::max(z - r0, int64_t{0}), w - 1));
                    for (int64_t dy = 0; dy < window; ++dy) {
                        const int64_t yy = std::min(std::max(y - r0 + dy, int64_t{0}), h - 1);
                        for (int64_t dx = 0; dx < window; ++dx) {
                            const int64_t zz = std::min(std::max(z - r0 + dx, int64_t{0}), w - 1);
                            m = std::min(m, x.at(b, ch, yy, zz));
                        }
                    }
                    out.at(b, ch, y, z) = m;
                }
    return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank(a, 2, "matmul", "lhs");
    require_rank(b, 2, "matmul", "rhs");
    require(a.extent(1) == b.extent(0), "matmul: inner extents do not match, " + shape_string(a.shape()) +
                                            " x " + shape_string(b.shape()));
    const int64_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
    Tensor out({m, n});
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int64_t p = 0; p < k; ++p)
                acc += static_cast<double>(a.at(i, p)) * static_cast<double>(b.at(p, j));
            out.at(i, j) = static_cast<float>(acc);
        }
    return out;
}

namespace {

Tensor zip(const Tensor& a, const Tensor& b, const char* who, float (*fn)(float, float)) {
    if (!a.same_extents(b))
        throw std::invalid_argument(std::string(who) + ": extent mismatch, " + shape_string(a.shape()) + " vs " +
                                    shape_string(b.shape()));
    Tensor out(a.shape());
    for (int64_t i = 0; i < a.numel(); ++i) out[i] = fn(a[i], b[i]);
    return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return zip(a, b, "add", +[](float x, float y) { return x + y; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return zip(a, b, "sub", +[](float x, float y) { return x - y; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return zip(a, b, "mul", +[](float x, float y) { return x * y; });
}

Tensor scale(const Tensor& a, float s) {
    Tensor out(a.shape());
    for (int64_t i = 0; i < a.numel(); ++i) out[i] = a[i] * s;
    return out;
}

Tensor clamp01(const Tensor& a) {
    Tensor out(a.shape());
    for (int64_t i = 0; i < a.numel(); ++i) out[i] = std::min(std::max(a[i], 0.f), 1.f);
    return out;
}

}  // namespace hazelab
