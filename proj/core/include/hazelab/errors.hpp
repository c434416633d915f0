#pragma once

#include <stdexcept>
#include <string>

namespace hazelab {

// File and parse failures. The CLI maps these to exit code 2.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Semantic validation failures. The CLI maps these to exit code 3.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct WeightStoreError : ValidationError {
    enum class Kind {
        BadManifest,
        OverlappingOffsets,
        MissingTensor,
        ShapeMismatch,
        TruncatedBlob,
    };

    WeightStoreError(Kind k, const std::string& msg) : ValidationError(msg), kind(k) {}

    Kind kind;
};

}  // namespace hazelab
