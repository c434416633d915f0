#pragma once

#include <array>

#include "hazelab/tensor.hpp"

namespace hazelab {

// A synthetic scene: clean radiance, per-pixel transmission and a global
// atmospheric light. Transmission is kept within [t_min, 1] so the forward
// model stays invertible.
struct HazeScene {
    Tensor clean;                                  // (N, 3, H, W), values in [0, 1]
    Tensor transmission;                           // (N, 1, H, W)
    std::array<float, 3> atmospheric_light{};      // per-channel, values in [0, 1]
    float t_min = 0.1f;

    void validate() const;
};

// Clamps transmission into [t_min, 1] while building the scene.
HazeScene make_scene(Tensor clean, Tensor transmission, std::array<float, 3> atmospheric_light,
                     float t_min = 0.1f);

// I = J * t + A * (1 - t)
Tensor synthesize_haze(const HazeScene& scene);

// J = (I - A * (1 - max(t, t_min))) / max(t, t_min), clamped to [0, 1]
Tensor invert_haze(const Tensor& hazy, const Tensor& transmission,
                   const std::array<float, 3>& atmospheric_light, float t_min);

// Per-pixel channel minimum followed by a same-extent min pool.
Tensor classical_dark_channel(const Tensor& image, int64_t patch);

// Shares the inversion path with invert_haze bit for bit.
Tensor estimate_scene_reflectance(const Tensor& hazy, const Tensor& t_hat,
                                  const std::array<float, 3>& atmospheric_light, float t_min);

}  // namespace hazelab
