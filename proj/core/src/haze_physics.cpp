#include "hazelab/haze_physics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hazelab/ops.hpp"

namespace hazelab {

namespace {

void check_pair(const Tensor& image, const Tensor& t, const char* who) {
    if (image.rank() != 4 || image.extent(1) != 3)
        throw std::invalid_argument(std::string(who) + ": image must be (N, 3, H, W), got " +
                                    shape_string(image.shape()));
    if (t.rank() != 4 || t.extent(1) != 1)
        throw std::invalid_argument(std::string(who) + ": transmission must be (N, 1, H, W), got " +
                                    shape_string(t.shape()));
    if (image.extent(0) != t.extent(0) || image.extent(2) != t.extent(2) || image.extent(3) != t.extent(3))
        throw std::invalid_argument(std::string(who) + ": image " + shape_string(image.shape()) +
                                    " and transmission " + shape_string(t.shape()) + " extents do not match");
}

}  // namespace

void HazeScene::validate() const {
    check_pair(clean, transmission, "HazeScene");
    if (!(t_min > 0.f) || t_min > 1.f)
        throw std::invalid_argument("HazeScene: t_min must be in (0, 1], got " + std::to_string(t_min));
    for (int64_t i = 0; i < clean.numel(); ++i)
        if (!(clean[i] >= 0.f && clean[i] <= 1.f))
            throw std::invalid_argument("HazeScene: clean values must be in [0, 1]");
    for (int64_t i = 0; i < transmission.numel(); ++i)
        if (!(transmission[i] >= t_min && transmission[i] <= 1.f))
            throw std::invalid_argument("HazeScene: transmission values must be in [t_min, 1]");
    for (float a : atmospheric_light)
        if (!(a >= 0.f && a <= 1.f))
            throw std::invalid_argument("HazeScene: atmospheric light must be in [0, 1]");
}

HazeScene make_scene(Tensor clean, Tensor transmission, std::array<float, 3> atmospheric_light,
                     float t_min) {
    HazeScene s;
    s.clean = std::move(clean);
    s.transmission = std::move(transmission);
    s.atmospheric_light = atmospheric_light;
    s.t_min = t_min;
    for (int64_t i = 0; i < s.transmission.numel(); ++i)
        s.transmission[i] = std::min(std::max(s.transmission[i], t_min), 1.f);
    s.validate();
    return s;
}

Tensor synthesize_haze(const HazeScene& scene) {
    scene.validate();
    const Tensor& j = scene.clean;
    const Tensor& t = scene.transmission;
    const int64_t n = j.extent(0), h = j.extent(2), w = j.extent(3);
    Tensor out(j.shape());
    for (int64_t b = 0; b < n; ++b)
        for (int64_t c = 0; c < 3; ++c) {
            const float a = scene.atmospheric_light[static_cast<size_t>(c)];
            for (int64_t y = 0; y < h; ++y)
                for (int64_t x = 0; x < w; ++x) {
                    const float tv = t.at(b, 0, y, x);
                    out.at(b, c, y, x) = j.at(b, c, y, x) * tv + a * (1.f - tv);
                }
        }
    return out;
}

Tensor invert_haze(const Tensor& hazy, const Tensor& transmission,
                   const std::array<float, 3>& atmospheric_light, float t_min) {
    check_pair(hazy, transmission, "invert_haze");
    if (!(t_min > 0.f))
        throw std::invalid_argument("invert_haze: t_min must be positive, got " + std::to_string(t_min));
    const int64_t n = hazy.extent(0), h = hazy.extent(2), w = hazy.extent(3);
    Tensor out(hazy.shape());
    for (int64_t b = 0; b < n; ++b)
        for (int64_t c = 0; c < 3; ++c) {
            const float a = atmospheric_light[static_cast<size_t>(c)];
            for (int64_t y = 0; y < h; ++y)
                for (int64_t x = 0; x < w; ++x) {
                    const float tv = std::max(transmission.at(b, 0, y, x), t_min);
                    const float j = (hazy.at(b, c, y, x) - a * (1.f - tv)) / tv;
                    out.at(b, c, y, x) = std::min(std::max(j, 0.f), 1.f);
                }
        }
    return out;
}

Tensor classical_dark_channel(const Tensor& image, int64_t patch) {
    if (image.rank() != 4 || image.extent(1) != 3)
        throw std::invalid_argument("classical_dark_channel: image must be (N, 3, H, W), got " +
                                    shape_string(image.shape()));
    const int64_t n = image.extent(0), h = image.extent(2), w = image.extent(3);
    Tensor mins({n, 1, h, w});
    for (int64_t b = 0; b < n; ++b)
        for (int64_t y = 0; y < h; ++y)
            for (int64_t x = 0; x < w; ++x)
                mins.at(b, 0, y, x) =
                    std::min(image.at(b, 0, y, x), std::min(image.at(b, 1, y, x), image.at(b, 2, y, x)));
    return min_pool2d(mins, patch);
}

Tensor estimate_scene_reflectance(const Tensor& hazy, const Tensor& t_hat,
                                  const std::array<float, 3>& atmospheric_light, float t_min) {
    return invert_haze(hazy, t_hat, atmospheric_light, t_min);
}

}  // namespace hazelab
