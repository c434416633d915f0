#pragma once

#include <cstdint>
#include <functional>

#include "hazelab/model.hpp"
#include "hazelab/tensor.hpp"

namespace hazelab {

struct PathConfig {
    int64_t steps = 32;
    double lambda = 1.0;
    double t_mid = 0.7;       // baseline transmission
    double fd_epsilon = 1e-3;
    double t_min = 0.1;       // transmission floor for reflectance recovery
    // Baseline is A*(1-t_mid) + R_scene*t_mid; raw mode drops the t_mid
    // factor on R_scene (the physically inconsistent literal form).
    bool raw_baseline = false;

    void validate() const;
};

struct AttributionMap {
    Tensor map;  // (1, 1, H, W), signed, channel-summed
    int64_t steps = 0;
    double lambda = 1.0;
    uint64_t baseline_checksum = 0;  // FNV-1a over the baseline's float bits
};

// A*(1-t_mid) + R_scene*t_mid, clamped to [0,1]; R_scene is the scene
// reflectance recovered from the image under its estimated parameters.
Tensor make_baseline(const Tensor& image, const AtmosphericParams& atm, const PathConfig& cfg);

// Straight-line path: baseline + alpha * (image - baseline). Endpoints are
// reproduced bitwise.
Tensor path_point(const Tensor& baseline, const Tensor& image, double alpha);

// Central finite differences per element. The divisor is the realized spread
// of the two float probes, which equals 2*epsilon up to rounding and keeps
// quadratic functionals exact. Throws if fn goes non-finite, naming the
// offending element.
Tensor grad_fd(const std::function<double(const Tensor&)>& fn, const Tensor& x,
               double fd_epsilon);

// ||t_ref - t_hat(x)||_2 / pixel count; t_hat comes from the model's
// estimator alone.
double loss_phy(const Tensor& x, DehazeModel& model, const Tensor& t_ref);

// MSE between dehaze(x) and the frozen reference output. Caches are reset
// before the evaluation so path probes stay independent.
double loss_feat(const Tensor& x, DehazeModel& model, const Tensor& j_ref);

// Gradient provider hook; grad_fd is the default, an analytic provider can
// be swapped in by callers that have one.
using GradProvider =
    std::function<Tensor(const std::function<double(const Tensor&)>&, const Tensor&, double)>;

// Midpoint-rule path integral of grad(loss_phy) * lambda * grad(loss_feat),
// accumulated per channel in doubles, divided by steps, then channel-summed.
// Inputs are capped at 32x32; finite differences make larger maps impractical.
AttributionMap paam(DehazeModel& model, const Tensor& image, const PathConfig& cfg,
                    const GradProvider& grad = {});

}  // namespace hazelab
