#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace emo3d {

// Interleaved 8-bit raster image. channels is 1 (gray), 3 (RGB) or 4 (RGBA).
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels;

    bool empty() const { return width <= 0 || height <= 0 || pixels.empty(); }
    std::size_t byte_count() const { return pixels.size(); }

    std::uint8_t at(int x, int y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t& at(int x, int y, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    static Image solid(int width, int height, std::uint8_t r, std::uint8_t g, std::uint8_t b);
};

// Content hash over dimensions + pixel bytes; used for content addressing
// and the planted-pair lookup.
std::string image_content_hash(const Image& img);

// Fraction of pixels whose byte values differ in any channel.
double pixel_diff_fraction(const Image& a, const Image& b);

// PNG codec (8-bit gray/RGB/RGBA, non-interlaced). Encoding is
// deterministic: fixed filter and compression settings.
std::vector<std::uint8_t> encode_png(const Image& img);
Image decode_png(const std::vector<std::uint8_t>& bytes);

void write_png(const std::filesystem::path& path, const Image& img);
Image read_png(const std::filesystem::path& path);

} // namespace emo3d
