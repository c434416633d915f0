#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hazelab {

// Dense 32-bit float tensor, row-major, rank <= 4.
// Rank-4 tensors are laid out batch, channel, height, width.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int64_t> shape);
    Tensor(std::vector<int64_t> shape, std::vector<float> data);

    static Tensor full(std::vector<int64_t> shape, float value);

    int64_t rank() const { return static_cast<int64_t>(shape_.size()); }
    const std::vector<int64_t>& shape() const { return shape_; }
    int64_t extent(int64_t axis) const;
    int64_t numel() const { return static_cast<int64_t>(data_.size()); }
    bool empty() const { return data_.empty() && shape_.empty(); }

    int64_t batch() const { return extent(0); }
    int64_t channels() const { return extent(1); }
    int64_t height() const { return extent(2); }
    int64_t width() const { return extent(3); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::vector<float>& values() { return data_; }
    const std::vector<float>& values() const { return data_; }

    float& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    float operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    float& at(int64_t n, int64_t c, int64_t h, int64_t w) { return data_[offset4(n, c, h, w)]; }
    float at(int64_t n, int64_t c, int64_t h, int64_t w) const { return data_[offset4(n, c, h, w)]; }
    float& at(int64_t i, int64_t j, int64_t k) { return data_[offset3(i, j, k)]; }
    float at(int64_t i, int64_t j, int64_t k) const { return data_[offset3(i, j, k)]; }
    float& at(int64_t i, int64_t j) { return data_[offset2(i, j)]; }
    float at(int64_t i, int64_t j) const { return data_[offset2(i, j)]; }

    bool same_extents(const Tensor& other) const { return shape_ == other.shape_; }

private:
    size_t offset4(int64_t n, int64_t c, int64_t h, int64_t w) const {
        return static_cast<size_t>(((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w);
    }
    size_t offset3(int64_t i, int64_t j, int64_t k) const {
        return static_cast<size_t>((i * shape_[1] + j) * shape_[2] + k);
    }
    size_t offset2(int64_t i, int64_t j) const {
        return static_cast<size_t>(i * shape_[1] + j);
    }

    std::vector<int64_t> shape_;
    std::vector<float> data_;
};

int64_t shape_numel(const std::vector<int64_t>& shape);
std::string shape_string(const std::vector<int64_t>& shape);
bool all_finite(const Tensor& t);

}  // namespace hazelab
