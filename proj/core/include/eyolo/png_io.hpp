#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace eyolo {

/// Interleaved 8-bit RGB image.
struct ImageU8 {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels; // r,g,b per pixel, row-major

    std::uint8_t& at(int x, int y, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    std::uint8_t at(int x, int y, int c) const { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
};

/// Single-channel 16-bit image (depth in millimeters).
struct ImageU16 {
    int width = 0;
    int height = 0;
    std::vector<std::uint16_t> pixels;

    std::uint16_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::uint16_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

ImageU8 read_png_rgb8(const std::filesystem::path& path);
ImageU16 read_png_gray16(const std::filesystem::path& path);
void write_png_rgb8(const std::filesystem::path& path, const ImageU8& image);
void write_png_gray16(const std::filesystem::path& path, const ImageU16& image);

} // namespace eyolo
