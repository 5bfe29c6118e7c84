#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "shield/io.hpp"

namespace shield {

Tensor quantize8(const Tensor& image) {
    Tensor out = image;
    for (double& v : out.data) {
        double c = std::min(1.0, std::max(0.0, v));
        v = std::lround(c * 255.0) / 255.0;
    }
    return out;
}

void save_png(const std::string& path, const Tensor& image) {
    if (image.ndim() != 3 || image.dim(2) != 3)
        throw std::invalid_argument("save_png: expected HxWx3 image");
    int H = image.dim(0), W = image.dim(1);
    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), std::fclose);
    if (!fp) throw FileError("save_png: cannot open " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw IoError("save_png: libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("save_png: write failure for " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(W), static_cast<png_uint_32>(H), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<unsigned char> row(static_cast<size_t>(W) * 3);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < 3; ++c) {
                double v = image.data[(static_cast<size_t>(y) * W + x) * 3 + c];
                v = std::min(1.0, std::max(0.0, v));
                row[static_cast<size_t>(x) * 3 + c] =
                    static_cast<unsigned char>(std::lround(v * 255.0));
            }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Tensor load_png(const std::string& path) {
    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "rb"), std::fclose);
    if (!fp) throw FileError("load_png: cannot open " + path);

    unsigned char sig[8];
    if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8))
        throw FormatError("load_png: not a PNG file: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw IoError("load_png: libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("load_png: corrupt PNG: " + path);
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    int H = static_cast<int>(png_get_image_height(png, info));
    int W = static_cast<int>(png_get_image_width(png, info));
    if (png_get_channels(png, info) != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("load_png: expected 3 channels after conversion: " + path);
    }
    Tensor out = Tensor::zeros({H, W, 3});
    std::vector<unsigned char> row(static_cast<size_t>(W) * 3);
    for (int y = 0; y < H; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (size_t i = 0; i < row.size(); ++i)
            out.data[static_cast<size_t>(y) * W * 3 + i] = row[i] / 255.0;
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

}  // namespace shield
