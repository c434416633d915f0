#include "hazelab/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "hazelab/errors.hpp"
#include "hazelab/io_util.hpp"

namespace hazelab {

namespace {

// PNM header scanner: tokens separated by whitespace, '#' comments run to
// end of line.
struct PnmScanner {
    const std::vector<std::uint8_t>& bytes;
    size_t pos = 0;
    const std::string& path;

    void skip_space_and_comments() {
        while (pos < bytes.size()) {
            const char c = static_cast<char>(bytes[pos]);
            if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                ++pos;
            } else {
                break;
            }
        }
    }

    std::string token() {
        skip_space_and_comments();
        size_t start = pos;
        while (pos < bytes.size()) {
            const char c = static_cast<char>(bytes[pos]);
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '#') break;
            ++pos;
        }
        if (pos == start) throw IoError("unexpected end of header in " + path);
        return std::string(bytes.begin() + start, bytes.begin() + pos);
    }

    int64_t number() {
        const std::string tok = token();
        for (char c : tok)
            if (c < '0' || c > '9') throw IoError("malformed header number in " + path);
        if (tok.size() > 9) throw IoError("header number out of range in " + path);
        return std::stoll(tok);
    }
};

Tensor read_pnm(const std::string& path, const char* magic, int64_t channels) {
    const std::vector<std::uint8_t> bytes = read_bytes(path);
    PnmScanner scan{bytes, 0, path};
    if (scan.token() != magic)
        throw IoError(path + " is not a " + magic + " image");
    const int64_t width = scan.number();
    const int64_t height = scan.number();
    const int64_t maxval = scan.number();
    if (width < 1 || height < 1) throw IoError("bad image dimensions in " + path);
    if (maxval < 1 || maxval > 65535) throw IoError("unsupported sample depth in " + path);
    // Exactly one whitespace byte separates the header from raster data.
    if (scan.pos >= bytes.size()) throw IoError("missing raster data in " + path);
    ++scan.pos;

    const int bytes_per_sample = maxval > 255 ? 2 : 1;
    const size_t samples = static_cast<size_t>(width) * height * channels;
    if (bytes.size() - scan.pos < samples * bytes_per_sample)
        throw IoError("raster data truncated in " + path);

    Tensor out({1, channels, height, width});
    const std::uint8_t* p = bytes.data() + scan.pos;
    const double inv = 1.0 / static_cast<double>(maxval);
    for (int64_t y = 0; y < height; ++y)
        for (int64_t x = 0; x < width; ++x)
            for (int64_t c = 0; c < channels; ++c) {
                uint32_t v;
                if (bytes_per_sample == 2) {
                    v = (static_cast<uint32_t>(p[0]) << 8) | p[1];
                    p += 2;
                } else {
                    v = *p++;
                }
                out.at(0, c, y, x) = static_cast<float>(v * inv);
            }
    return out;
}

uint32_t quantize(float v, uint32_t maxval) {
    const double clamped = std::min(1.0, std::max(0.0, static_cast<double>(v)));
    return static_cast<uint32_t>(std::lround(clamped * maxval));
}

void write_pnm(const std::string& path, const Tensor& image, const char* magic,
               int64_t channels, uint32_t maxval) {
    if (image.rank() != 4 || image.batch() != 1 || image.channels() != channels)
        throw ValidationError("image tensor must be (1," + std::to_string(channels) +
                              ",H,W), got " + shape_string(image.shape()));
    const int64_t height = image.height();
    const int64_t width = image.width();
    std::string header = std::string(magic) + "\n" + std::to_string(width) + " " +
                         std::to_string(height) + "\n" + std::to_string(maxval) + "\n";
    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    bytes.reserve(bytes.size() +
                  static_cast<size_t>(height) * width * channels * (maxval > 255 ? 2 : 1));
    for (int64_t y = 0; y < height; ++y)
        for (int64_t x = 0; x < width; ++x)
            for (int64_t c = 0; c < channels; ++c) {
                const uint32_t v = quantize(image.at(0, c, y, x), maxval);
                if (maxval > 255) {
                    bytes.push_back(static_cast<std::uint8_t>(v >> 8));
                    bytes.push_back(static_cast<std::uint8_t>(v & 0xff));
                } else {
                    bytes.push_back(static_cast<std::uint8_t>(v));
                }
            }
    atomic_write_bytes(path, bytes);
}

}  // namespace

Tensor read_ppm(const std::string& path) { return read_pnm(path, "P6", 3); }

void write_ppm(const std::string& path, const Tensor& image) {
    write_pnm(path, image, "P6", 3, 255);
}

Tensor read_pgm(const std::string& path) { return read_pnm(path, "P5", 1); }

void write_pgm(const std::string& path, const Tensor& image) {
    write_pnm(path, image, "P5", 1, 255);
}

void write_pgm16(const std::string& path, const Tensor& image) {
    write_pnm(path, image, "P5", 1, 65535);
}

}  // namespace hazelab
