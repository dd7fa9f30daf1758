#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "xaib/tensor.hpp"

namespace xaib {

// -1 blue, 0 white, +1 red; values outside [-1, 1] are clamped.
std::array<std::uint8_t, 3> diverging_color(double v);

// 8-bit RGB image, row-major.
struct RgbImage {
    std::size_t width = 0, height = 0;
    std::vector<std::uint8_t> pixels;

    RgbImage(std::size_t w, std::size_t h, std::uint8_t fill = 255) : width(w), height(h), pixels(w * h * 3, fill) {}
    void set(std::size_t x, std::size_t y, std::array<std::uint8_t, 3> rgb) {
        auto* p = &pixels[(y * width + x) * 3];
        p[0] = rgb[0];
        p[1] = rgb[1];
        p[2] = rgb[2];
    }
};

void write_png(const std::filesystem::path& path, const RgbImage& img);

// Draws `t` at (x0, y0) with each element scaled to `scale` pixels. Single-
// channel tensors use the diverging map, 3-channel tensors are shown as RGB
// in [0, 1].
void blit(RgbImage& img, const Tensor& t, std::size_t x0, std::size_t y0, std::size_t scale);

// Horizontal strip running from -1 to +1.
void draw_legend(RgbImage& img, std::size_t x0, std::size_t y0, std::size_t width, std::size_t height);

}  // namespace xaib
