#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hazelab {

// Writers stage into "<path>.tmp" then rename, so readers never see a
// partially written file.
void atomic_write_text(const std::string& path, const std::string& text);
void atomic_write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> read_bytes(const std::string& path);
std::string read_text(const std::string& path);

}  // namespace hazelab
