#include "hazelab/weight_store.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hazelab/errors.hpp"
#include "hazelab/io_util.hpp"

namespace hazelab {

using nlohmann::json;

namespace {

constexpr const char* kFormatName = "hazelab-weights";
constexpr int kFormatVersion = 1;

[[noreturn]] void fail(WeightStoreError::Kind kind, const std::string& msg) {
    throw WeightStoreError(kind, msg);
}

std::string blob_name_for(const std::string& manifest_path) {
    return std::filesystem::path(manifest_path).stem().string() + ".bin";
}

void append_f32_le(std::vector<std::uint8_t>& out, float v) {
    const uint32_t bits = std::bit_cast<uint32_t>(v);
    out.push_back(static_cast<std::uint8_t>(bits & 0xff));
    out.push_back(static_cast<std::uint8_t>((bits >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((bits >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((bits >> 24) & 0xff));
}

float read_f32_le(const std::uint8_t* p) {
    const uint32_t bits = static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
                          (static_cast<uint32_t>(p[2]) << 16) |
                          (static_cast<uint32_t>(p[3]) << 24);
    return std::bit_cast<float>(bits);
}

std::string hex64(uint64_t v) {
    std::ostringstream oss;
    oss << std::hex;
    for (int shift = 60; shift >= 0; shift -= 4) oss << ((v >> shift) & 0xf);
    return oss.str();
}

}  // namespace

uint64_t fnv1a64(const std::uint8_t* data, size_t n) {
    uint64_t h = 14695981039346656037ULL;
    for (size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 1099511628211ULL;
    }
    return h;
}

void WeightStore::put(const std::string& name, Tensor tensor) {
    if (name.empty()) throw ValidationError("weight name must not be empty");
    auto it = index_.find(name);
    if (it != index_.end()) {
        entries_[it->second].second = std::move(tensor);
        return;
    }
    index_.emplace(name, entries_.size());
    entries_.emplace_back(name, std::move(tensor));
}

bool WeightStore::contains(const std::string& name) const { return index_.count(name) > 0; }

const Tensor& WeightStore::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end())
        fail(WeightStoreError::Kind::MissingTensor, "missing tensor '" + name + "'");
    return entries_[it->second].second;
}

const Tensor& WeightStore::get(const std::string& name, const std::vector<int64_t>& shape) const {
    const Tensor& t = get(name);
    if (t.shape() != shape)
        fail(WeightStoreError::Kind::ShapeMismatch,
             "tensor '" + name + "' has shape " + shape_string(t.shape()) + ", expected " +
                 shape_string(shape));
    return t;
}

std::vector<std::string> WeightStore::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.first);
    return out;
}

void WeightStore::save(const std::string& manifest_path) const {
    std::vector<std::uint8_t> blob;
    json tensors = json::array();
    for (const auto& [name, tensor] : entries_) {
        json entry;
        entry["name"] = name;
        entry["shape"] = tensor.shape();
        entry["dtype"] = "f32";
        entry["byte_offset"] = blob.size();
        tensors.push_back(std::move(entry));
        blob.reserve(blob.size() + tensor.numel() * 4);
        for (float v : tensor.values()) append_f32_le(blob, v);
    }

    const std::string blob_name = blob_name_for(manifest_path);
    json manifest;
    manifest["format"] = kFormatName;
    manifest["version"] = kFormatVersion;
    manifest["blob"] = blob_name;
    manifest["blob_bytes"] = blob.size();
    manifest["checksum"] = hex64(fnv1a64(blob.data(), blob.size()));
    manifest["tensors"] = std::move(tensors);

    const std::filesystem::path dir = std::filesystem::path(manifest_path).parent_path();
    atomic_write_bytes((dir / blob_name).string(), blob);
    atomic_write_text(manifest_path, manifest.dump(2) + "\n");
}

WeightStore WeightStore::load(const std::string& manifest_path) {
    json j;
    try {
        j = json::parse(read_text(manifest_path));
    } catch (const json::exception& e) {
        fail(WeightStoreError::Kind::BadManifest,
             std::string("manifest is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("format") || !j["format"].is_string() ||
        j["format"].get<std::string>() != kFormatName)
        fail(WeightStoreError::Kind::BadManifest, "manifest format marker missing or unknown");
    if (!j.contains("version") || !j["version"].is_number_integer() ||
        j["version"].get<int>() != kFormatVersion)
        fail(WeightStoreError::Kind::BadManifest, "unsupported manifest version");
    if (!j.contains("blob") || !j["blob"].is_string())
        fail(WeightStoreError::Kind::BadManifest, "manifest missing blob filename");
    if (!j.contains("tensors") || !j["tensors"].is_array())
        fail(WeightStoreError::Kind::BadManifest, "manifest missing tensors array");

    const std::filesystem::path dir = std::filesystem::path(manifest_path).parent_path();
    const std::string blob_path = (dir / j["blob"].get<std::string>()).string();
    const std::vector<std::uint8_t> blob = read_bytes(blob_path);

    WeightStore store;
    size_t expected_offset = 0;
    for (const json& entry : j["tensors"]) {
        if (!entry.is_object() || !entry.contains("name") || !entry["name"].is_string() ||
            !entry.contains("shape") || !entry["shape"].is_array() || !entry.contains("dtype") ||
            !entry.contains("byte_offset") || !entry["byte_offset"].is_number_integer())
            fail(WeightStoreError::Kind::BadManifest, "malformed tensor entry");
        const std::string name = entry["name"].get<std::string>();
        if (entry["dtype"].get<std::string>() != "f32")
            fail(WeightStoreError::Kind::BadManifest,
                 "tensor '" + name + "' has unsupported dtype");
        std::vector<int64_t> shape;
        for (const json& dim : entry["shape"]) {
            if (!dim.is_number_integer() || dim.get<int64_t>() < 1)
                fail(WeightStoreError::Kind::BadManifest,
                     "tensor '" + name + "' has a non-positive extent");
            shape.push_back(dim.get<int64_t>());
        }
        const int64_t offset = entry["byte_offset"].get<int64_t>();
        if (offset < 0)
            fail(WeightStoreError::Kind::BadManifest,
                 "tensor '" + name + "' has a negative offset");
        if (static_cast<size_t>(offset) < expected_offset)
            fail(WeightStoreError::Kind::OverlappingOffsets,
                 "tensor '" + name + "' overlaps the previous tensor");
        if (static_cast<size_t>(offset) > expected_offset)
            fail(WeightStoreError::Kind::BadManifest,
                 "tensor '" + name + "' leaves a gap in the blob");
        const size_t bytes = static_cast<size_t>(shape_numel(shape)) * 4;
        if (offset + bytes > blob.size())
            fail(WeightStoreError::Kind::TruncatedBlob,
                 "blob ends before tensor '" + name + "'");
        std::vector<float> values(bytes / 4);
        for (size_t i = 0; i < values.size(); ++i)
            values[i] = read_f32_le(blob.data() + offset + i * 4);
        store.put(name, Tensor(shape, std::move(values)));
        expected_offset = static_cast<size_t>(offset) + bytes;
    }
    if (expected_offset != blob.size())
        fail(WeightStoreError::Kind::BadManifest, "blob has trailing bytes past the last tensor");
    if (j.contains("blob_bytes") &&
        (!j["blob_bytes"].is_number_integer() ||
         j["blob_bytes"].get<int64_t>() != static_cast<int64_t>(blob.size())))
        fail(WeightStoreError::Kind::BadManifest, "manifest blob_bytes disagrees with blob size");
    if (j.contains("checksum")) {
        if (!j["checksum"].is_string() ||
            j["checksum"].get<std::string>() != hex64(fnv1a64(blob.data(), blob.size())))
            fail(WeightStoreError::Kind::BadManifest, "blob checksum mismatch");
    }
    return store;
}

}  // namespace hazelab
