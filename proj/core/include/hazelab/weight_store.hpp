#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hazelab/tensor.hpp"

namespace hazelab {

// Named tensor collection persisted as a JSON manifest next to a packed
// little-endian float32 blob. Offsets in the manifest must be contiguous and
// in file order; load() rejects gaps, overlaps, and short blobs with distinct
// error kinds so callers can tell corruption from schema drift.
class WeightStore {
public:
    WeightStore() = default;

    // Insertion order is preserved and defines blob layout on save.
    void put(const std::string& name, Tensor tensor);

    bool contains(const std::string& name) const;
    const Tensor& get(const std::string& name) const;
    // Shape-checked lookup; extents must match exactly.
    const Tensor& get(const std::string& name, const std::vector<int64_t>& shape) const;

    std::vector<std::string> names() const;
    size_t size() const { return entries_.size(); }

    // Writes "<path>" (manifest) and "<path stem>.bin" (blob) atomically.
    void save(const std::string& manifest_path) const;
    static WeightStore load(const std::string& manifest_path);

private:
    std::vector<std::pair<std::string, Tensor>> entries_;
    std::unordered_map<std::string, size_t> index_;
};

// FNV-1a 64-bit, used as the blob checksum in manifests.
uint64_t fnv1a64(const std::uint8_t* data, size_t n);

}  // namespace hazelab
