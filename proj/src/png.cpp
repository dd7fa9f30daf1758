#include "xaib/png.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

#include <png.h>

namespace xaib {

std::array<std::uint8_t, 3> diverging_color(double v) {
    if (!std::isfinite(v)) v = 0.0;
    v = std::clamp(v, -1.0, 1.0);
    const auto fade = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - std::abs(v))));
    if (v >= 0.0) return {255, fade, fade};
    return {fade, fade, 255};
}

void write_png(const std::filesystem::path& path, const RgbImage& img) {
    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!fp) throw std::runtime_error("cannot open " + path.string() + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png == nullptr) throw std::runtime_error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (info == nullptr || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("libpng failed writing " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t y = 0; y < img.height; ++y) {
        png_write_row(png, const_cast<png_bytep>(&img.pixels[y * img.width * 3]));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void blit(RgbImage& img, const Tensor& t, std::size_t x0, std::size_t y0, std::size_t scale) {
    if (t.c() != 1 && t.c() != 3) throw std::invalid_argument("blit needs 1 or 3 channels");
    for (std::size_t y = 0; y < t.h(); ++y) {
        for (std::size_t x = 0; x < t.w(); ++x) {
            std::array<std::uint8_t, 3> rgb;
            if (t.c() == 1) {
                rgb = diverging_color(t.at(y, x, 0));
            } else {
                for (std::size_t ch = 0; ch < 3; ++ch) {
                    rgb[ch] = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(t.at(y, x, ch), 0.0, 1.0)));
                }
            }
            for (std::size_t dy = 0; dy < scale; ++dy) {
                for (std::size_t dx = 0; dx < scale; ++dx) {
                    const std::size_t px = x0 + x * scale + dx, py = y0 + y * scale + dy;
                    if (px < img.width && py < img.height) img.set(px, py, rgb);
                }
            }
        }
    }
}

void draw_legend(RgbImage& img, std::size_t x0, std::size_t y0, std::size_t width, std::size_t height) {
    for (std::size_t x = 0; x < width; ++x) {
        const double v = width > 1 ? -1.0 + 2.0 * static_cast<double>(x) / static_cast<double>(width - 1) : 0.0;
        for (std::size_t y = 0; y < height; ++y) {
            if (x0 + x < img.width && y0 + y < img.height) img.set(x0 + x, y0 + y, diverging_color(v));
        }
    }
}

}  // namespace xaib
