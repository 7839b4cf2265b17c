#include "eyolo/png_io.hpp"

#include <cstdio>
#include <memory>

#include <png.h>

#include "eyolo/errors.hpp"

namespace eyolo {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.string().c_str(), mode));
    if (!f) throw IoError("cannot open " + path.string());
    return f;
}

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReader() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    }
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriter() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    }
};

void begin_read(PngReader& r, std::FILE* f, const std::filesystem::path& path) {
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!r.png) throw IoError("libpng read init failed");
    r.info = png_create_info_struct(r.png);
    if (!r.info) throw IoError("libpng info init failed");
    if (setjmp(png_jmpbuf(r.png))) throw FormatError("corrupt PNG: " + path.string());
    png_init_io(r.png, f);
    png_read_info(r.png, r.info);
}

} // namespace

ImageU8 read_png_rgb8(const std::filesystem::path& path) {
    FilePtr f = open_file(path, "rb");
    PngReader r;
    begin_read(r, f.get(), path);

    const png_uint_32 width = png_get_image_width(r.png, r.info);
    const png_uint_32 height = png_get_image_height(r.png, r.info);
    const int bit_depth = png_get_bit_depth(r.png, r.info);
    const int color_type = png_get_color_type(r.png, r.info);

    // Normalize anything reasonable down to 8-bit RGB.
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(r.png);
    if (bit_depth == 16) png_set_strip_16(r.png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(r.png);
    png_read_update_info(r.png, r.info);

    if (png_get_rowbytes(r.png, r.info) != width * 3)
        throw FormatError("unexpected PNG row layout: " + path.string());

    ImageU8 image;
    image.width = static_cast<int>(width);
    image.height = static_cast<int>(height);
    image.pixels.resize(static_cast<std::size_t>(width) * height * 3);
    std::vector<png_bytep> rows(height);
    for (png_uint_32 y = 0; y < height; ++y)
        rows[y] = image.pixels.data() + static_cast<std::size_t>(y) * width * 3;
    png_read_image(r.png, rows.data());
    png_read_end(r.png, nullptr);
    return image;
}

ImageU16 read_png_gray16(const std::filesystem::path& path) {
    FilePtr f = open_file(path, "rb");
    PngReader r;
    begin_read(r, f.get(), path);

    const png_uint_32 width = png_get_image_width(r.png, r.info);
    const png_uint_32 height = png_get_image_height(r.png, r.info);
    const int bit_depth = png_get_bit_depth(r.png, r.info);
    const int color_type = png_get_color_type(r.png, r.info);
    if (color_type != PNG_COLOR_TYPE_GRAY || bit_depth != 16)
        throw FormatError("expected 16-bit grayscale PNG: " + path.string());
#if __BYTE_ORDER__ == __ORDER_LITTLE_ENDIAN__
    png_set_swap(r.png); // PNG stores 16-bit big-endian
#endif
    png_read_update_info(r.png, r.info);

    ImageU16 image;
    image.width = static_cast<int>(width);
    image.height = static_cast<int>(height);
    image.pixels.resize(static_cast<std::size_t>(width) * height);
    std::vector<png_bytep> rows(height);
    for (png_uint_32 y = 0; y < height; ++y)
        rows[y] = reinterpret_cast<png_bytep>(image.pixels.data() +
                                              static_cast<std::size_t>(y) * width);
    png_read_image(r.png, rows.data());
    png_read_end(r.png, nullptr);
    return image;
}

void write_png_rgb8(const std::filesystem::path& path, const ImageU8& image) {
    if (image.pixels.size() != static_cast<std::size_t>(image.width) * image.height * 3)
        throw DimensionError("write_png_rgb8: pixel buffer does not match dimensions");
    FilePtr f = open_file(path, "wb");
    PngWriter w;
    w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!w.png) throw IoError("libpng write init failed");
    w.info = png_create_info_struct(w.png);
    if (!w.info) throw IoError("libpng info init failed");
    if (setjmp(png_jmpbuf(w.png))) throw IoError("PNG write failed: " + path.string());
    png_init_io(w.png, f.get());
    png_set_IHDR(w.png, w.info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(w.png, w.info);
    for (int y = 0; y < image.height; ++y)
        png_write_row(w.png, const_cast<png_bytep>(image.pixels.data() +
                                                   static_cast<std::size_t>(y) * image.width * 3));
    png_write_end(w.png, nullptr);
}

void write_png_gray16(const std::filesystem::path& path, const ImageU16& image) {
    if (image.pixels.size() != static_cast<std::size_t>(image.width) * image.height)
        throw DimensionError("write_png_gray16: pixel buffer does not match dimensions");
    FilePtr f = open_file(path, "wb");
    PngWriter w;
    w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!w.png) throw IoError("libpng write init failed");
    w.info = png_create_info_struct(w.png);
    if (!w.info) throw IoError("libpng info init failed");
    if (setjmp(png_jmpbuf(w.png))) throw IoError("PNG write failed: " + path.string());
    png_init_io(w.png, f.get());
    png_set_IHDR(w.png, w.info, image.width, image.height, 16, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(w.png, w.info);
#if __BYTE_ORDER__ == __ORDER_LITTLE_ENDIAN__
    png_set_swap(w.png);
#endif
    for (int y = 0; y < image.height; ++y)
        png_write_row(w.png, reinterpret_cast<png_bytep>(const_cast<std::uint16_t*>(
                                 image.pixels.data() + static_cast<std::size_t>(y) * image.width)));
    png_write_end(w.png, nullptr);
}

} // namespace eyolo
