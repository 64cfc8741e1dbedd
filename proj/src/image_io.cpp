#include "rap/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

namespace rap {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void save_png(const Image& img, const std::string& path) {
    if (img.height <= 0 || img.width <= 0) throw invalid_argument("save_png: empty image");
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw io_error("cannot open for writing: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw io_error("png writer init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw io_error("png write failed: " + path);
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<png_byte> row(static_cast<std::size_t>(img.width) * 3);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            const double* px = img.pixel(r, c);
            for (int k = 0; k < 3; ++k) {
                double v = std::min(1.0, std::max(0.0, px[k]));
                row[static_cast<std::size_t>(c) * 3 + k] = static_cast<png_byte>(std::lround(v * 255.0));
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image load_png(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw io_error("cannot open file: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw io_error("png reader init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw format_error("corrupt PNG: " + path);
    }
    png_init_io(png, f.get());
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    png_byte color = png_get_color_type(png, info);
    png_byte depth = png_get_bit_depth(png, info);

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    Image img;
    img.height = static_cast<int>(h);
    img.width = static_cast<int>(w);
    img.data.resize(static_cast<std::size_t>(h) * w * 3);
    std::vector<png_byte> row(png_get_rowbytes(png, info));
    for (png_uint_32 r = 0; r < h; ++r) {
        png_read_row(png, row.data(), nullptr);
        for (png_uint_32 c = 0; c < w; ++c) {
            double* px = img.pixel(static_cast<int>(r), static_cast<int>(c));
            for (int k = 0; k < 3; ++k) px[k] = row[static_cast<std::size_t>(c) * 3 + k] / 255.0;
        }
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void save_rapi(const Image& img, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw io_error("cannot open for writing: " + path);
    f.write("RAPI", 4);
    std::uint32_t h = static_cast<std::uint32_t>(img.height), w = static_cast<std::uint32_t>(img.width);
    f.write(reinterpret_cast<const char*>(&h), 4);
    f.write(reinterpret_cast<const char*>(&w), 4);
    std::vector<float> row(img.data.size());
    for (std::size_t i = 0; i < img.data.size(); ++i) row[i] = static_cast<float>(img.data[i]);
    f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * 4));
    if (!f) throw io_error("write failed: " + path);
}

Image load_rapi(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open file: " + path);
    char magic[4];
    std::uint32_t h = 0, w = 0;
    f.read(magic, 4);
    f.read(reinterpret_cast<char*>(&h), 4);
    f.read(reinterpret_cast<char*>(&w), 4);
    if (!f || std::memcmp(magic, "RAPI", 4) != 0) throw format_error("not a RAPI image: " + path);
    Image img;
    img.height = static_cast<int>(h);
    img.width = static_cast<int>(w);
    std::vector<float> buf(static_cast<std::size_t>(h) * w * 3);
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
    if (!f) throw format_error("RAPI image truncated: " + path);
    img.data.assign(buf.begin(), buf.end());
    return img;
}

Image load_image(const std::string& path) {
    auto ends_with = [&](const char* suf) {
        std::string_view sv(path);
        std::string_view s(suf);
        return sv.size() >= s.size() && sv.substr(sv.size() - s.size()) == s;
    };
    if (ends_with(".rapi")) return load_rapi(path);
    if (ends_with(".png") || ends_with(".PNG")) return load_png(path);
    throw invalid_argument("unsupported image extension: " + path);
}

}  // namespace rap
