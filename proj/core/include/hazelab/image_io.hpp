#pragma once

#include <string>

#include "hazelab/tensor.hpp"

namespace hazelab {

// Binary PNM images. Color tensors are (1,3,H,W), grayscale (1,1,H,W), values
// in [0,1]. Readers accept 8-bit and 16-bit samples; writers quantize with
// round-half-up after clamping to [0,1]. All writes are atomic.
Tensor read_ppm(const std::string& path);
void write_ppm(const std::string& path, const Tensor& image);

Tensor read_pgm(const std::string& path);
void write_pgm(const std::string& path, const Tensor& image);
// 16-bit output preserves more of the dynamic range of attribution maps.
void write_pgm16(const std::string& path, const Tensor& image);

}  // namespace hazelab
