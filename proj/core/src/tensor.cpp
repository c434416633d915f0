#include "hazelab/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace hazelab {

int64_t shape_numel(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t e : shape) n *= e;
    return n;
}

std::string shape_string(const std::vector<int64_t>& shape) {
    std::string out = "(";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(shape[i]);
    }
    return out + ")";
}

namespace {

void check_shape(const std::vector<int64_t>& shape) {
    if (shape.size() > 4)
        throw std::invalid_argument("tensor rank must be <= 4, got " + std::to_string(shape.size()));
    for (int64_t e : shape)
        if (e < 0)
            throw std::invalid_argument("tensor extents must be nonnegative, got " + shape_string(shape));
}

}  // namespace

Tensor::Tensor(std::vector<int64_t> shape) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(static_cast<size_t>(shape_numel(shape_)), 0.f);
}

Tensor::Tensor(std::vector<int64_t> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if (static_cast<int64_t>(data_.size()) != shape_numel(shape_))
        throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                    " does not match shape " + shape_string(shape_));
}

Tensor Tensor::full(std::vector<int64_t> shape, float value) {
    Tensor t(std::move(shape));
    for (float& v : t.data_) v = value;
    return t;
}

int64_t Tensor::extent(int64_t axis) const {
    if (axis < 0 || axis >= rank())
        throw std::invalid_argument("tensor axis " + std::to_string(axis) + " out of range for shape " +
                                    shape_string(shape_));
    return shape_[static_cast<size_t>(axis)];
}

bool all_finite(const Tensor& t) {
    for (int64_t i = 0; i < t.numel(); ++i)
        if (!std::isfinite(t[i])) return false;
    return true;
}

}  // namespace hazelab
