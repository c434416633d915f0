#include "hazelab/attribution.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "hazelab/errors.hpp"
#include "hazelab/haze_physics.hpp"
#include "hazelab/ops.hpp"
#include "hazelab/weight_store.hpp"

namespace hazelab {

void PathConfig::validate() const {
    if (steps < 2) throw ValidationError("attribution steps must be >= 2");
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw ValidationError("attribution lambda must be >= 0");
    if (!(t_mid > 0.0 && t_mid < 1.0)) throw ValidationError("t_mid must be in (0, 1)");
    if (!(fd_epsilon >= 1e-5 && fd_epsilon <= 1e-2))
        throw ValidationError("fd_epsilon must be in [1e-5, 1e-2]");
    if (!(t_min > 0.0 && t_min <= 1.0)) throw ValidationError("t_min must be in (0, 1]");
}

Tensor make_baseline(const Tensor& image, const AtmosphericParams& atm, const PathConfig& cfg) {
    cfg.validate();
    const Tensor r_scene = estimate_scene_reflectance(image, atm.transmission,
                                                      atm.atmospheric_light,
                                                      static_cast<float>(cfg.t_min));
    const float t_mid = static_cast<float>(cfg.t_mid);
    const float scene_scale = cfg.raw_baseline ? 1.0f : t_mid;
    Tensor out(image.shape());
    for (int64_t c = 0; c < 3; ++c) {
        const float airlight = atm.atmospheric_light[static_cast<size_t>(c)] * (1.0f - t_mid);
        for (int64_t y = 0; y < image.height(); ++y)
            for (int64_t x = 0; x < image.width(); ++x)
                out.at(0, c, y, x) = airlight + r_scene.at(0, c, y, x) * scene_scale;
    }
    return clamp01(out);
}

Tensor path_point(const Tensor& baseline, const Tensor& image, double alpha) {
    if (!baseline.same_extents(image))
        throw ValidationError("path endpoints have different extents: " +
                              shape_string(baseline.shape()) + " vs " +
                              shape_string(image.shape()));
    if (alpha == 0.0) return baseline;
    if (alpha == 1.0) return image;
    Tensor out(baseline.shape());
    for (int64_t i = 0; i < out.numel(); ++i)
        out[i] = static_cast<float>(static_cast<double>(baseline[i]) +
                                    alpha * (static_cast<double>(image[i]) -
                                             static_cast<double>(baseline[i])));
    return out;
}

namespace {

std::string element_name(const Tensor& x, int64_t i) {
    if (x.rank() == 4) {
        const int64_t w = x.extent(3), h = x.extent(2), c = x.extent(1);
        const int64_t xx = i % w, yy = (i / w) % h, cc = (i / (w * h)) % c;
        return "(c=" + std::to_string(cc) + ", y=" + std::to_string(yy) +
               ", x=" + std::to_string(xx) + ")";
    }
    return "index " + std::to_string(i);
}

}  // namespace

Tensor grad_fd(const std::function<double(const Tensor&)>& fn, const Tensor& x,
               double fd_epsilon) {
    if (!fn) throw ValidationError("grad_fd: missing functional");
    if (!(fd_epsilon > 0.0)) throw ValidationError("grad_fd: epsilon must be positive");
    Tensor grad(x.shape());
    Tensor probe = x;
    const float eps = static_cast<float>(fd_epsilon);
    for (int64_t i = 0; i < x.numel(); ++i) {
        const float orig = probe[i];
        const float hi = orig + eps;
        const float lo = orig - eps;
        probe[i] = hi;
        const double f_hi = fn(probe);
        probe[i] = lo;
        const double f_lo = fn(probe);
        probe[i] = orig;
        if (!std::isfinite(f_hi) || !std::isfinite(f_lo))
            throw ValidationError("grad_fd: non-finite loss perturbing element " +
                                  element_name(x, i));
        const double spread = static_cast<double>(hi) - static_cast<double>(lo);
        grad[i] = spread == 0.0 ? 0.0f : static_cast<float>((f_hi - f_lo) / spread);
    }
    return grad;
}

double loss_phy(const Tensor& x, DehazeModel& model, const Tensor& t_ref) {
    const Tensor t_hat = model.estimate_params(x).transmission;
    if (!t_hat.same_extents(t_ref))
        throw ValidationError("loss_phy: transmission extents differ, " +
                              shape_string(t_hat.shape()) + " vs " + shape_string(t_ref.shape()));
    double ss = 0.0;
    for (int64_t i = 0; i < t_ref.numel(); ++i) {
        const double d = static_cast<double>(t_ref[i]) - static_cast<double>(t_hat[i]);
        ss += d * d;
    }
    return std::sqrt(ss) / static_cast<double>(t_ref.numel());
}

double loss_feat(const Tensor& x, DehazeModel& model, const Tensor& j_ref) {
    model.reset_caches();
    const Tensor j_hat = model.dehaze(x).j_hat;
    if (!j_hat.same_extents(j_ref))
        throw ValidationError("loss_feat: output extents differ, " + shape_string(j_hat.shape()) +
                              " vs " + shape_string(j_ref.shape()));
    double ss = 0.0;
    for (int64_t i = 0; i < j_ref.numel(); ++i) {
        const double d = static_cast<double>(j_hat[i]) - static_cast<double>(j_ref[i]);
        ss += d * d;
    }
    return ss / static_cast<double>(j_ref.numel());
}

AttributionMap paam(DehazeModel& model, const Tensor& image, const PathConfig& cfg,
                    const GradProvider& grad) {
    cfg.validate();
    if (image.rank() != 4 || image.batch() != 1 || image.channels() != 3)
        throw ValidationError("paam expects a (1,3,H,W) image, got " +
                              shape_string(image.shape()));
    if (image.height() > 32 || image.width() > 32)
        throw ValidationError("paam inputs are capped at 32x32, got " +
                              shape_string(image.shape()));
    const GradProvider& g = grad ? grad : GradProvider(grad_fd);

    model.reset_caches();
    const DehazeResult ref = model.dehaze(image);
    const Tensor t_ref = ref.atm.transmission;
    const Tensor j_ref = ref.j_hat;
    const Tensor baseline = make_baseline(image, ref.atm, cfg);

    auto phy_fn = [&](const Tensor& x) { return loss_phy(x, model, t_ref); };
    auto feat_fn = [&](const Tensor& x) { return loss_feat(x, model, j_ref); };

    const int64_t h = image.height(), w = image.width();
    std::vector<double> acc(static_cast<size_t>(3 * h * w), 0.0);
    for (int64_t k = 0; k < cfg.steps; ++k) {
        const double alpha = (static_cast<double>(k) + 0.5) / static_cast<double>(cfg.steps);
        const Tensor xa = path_point(baseline, image, alpha);
        const Tensor g_phy = g(phy_fn, xa, cfg.fd_epsilon);
        const Tensor g_feat = g(feat_fn, xa, cfg.fd_epsilon);
        for (size_t i = 0; i < acc.size(); ++i)
            acc[i] += static_cast<double>(g_phy[static_cast<int64_t>(i)]) *
                      static_cast<double>(g_feat[static_cast<int64_t>(i)]) * cfg.lambda;
    }

    AttributionMap out;
    out.map = Tensor({1, 1, h, w});
    const double steps = static_cast<double>(cfg.steps);
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x) {
            double total = 0.0;
            for (int64_t c = 0; c < 3; ++c)
                total += acc[static_cast<size_t>((c * h + y) * w + x)] / steps;
            out.map.at(0, 0, y, x) = static_cast<float>(total);
        }
    if (!all_finite(out.map)) throw ValidationError("attribution map has non-finite values");

    out.steps = cfg.steps;
    out.lambda = cfg.lambda;
    std::vector<std::uint8_t> bytes;
    bytes.reserve(static_cast<size_t>(baseline.numel()) * 4);
    for (int64_t i = 0; i < baseline.numel(); ++i) {
        const uint32_t bits = std::bit_cast<uint32_t>(baseline[i]);
        bytes.push_back(static_cast<std::uint8_t>(bits & 0xff));
        bytes.push_back(static_cast<std::uint8_t>((bits >> 8) & 0xff));
        bytes.push_back(static_cast<std::uint8_t>((bits >> 16) & 0xff));
        bytes.push_back(static_cast<std::uint8_t>((bits >> 24) & 0xff));
    }
    out.baseline_checksum = fnv1a64(bytes.data(), bytes.size());
    return out;
}

}  // namespace hazelab
