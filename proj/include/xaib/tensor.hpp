#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace xaib {

struct Shape {
    std::size_t h = 0;
    std::size_t w = 0;
    std::size_t c = 0;

    std::size_t size() const { return h * w * c; }
    friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

// Dense (h, w, c) array of doubles in row-major order.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    const Shape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    std::size_t h() const { return shape_.h; }
    std::size_t w() const { return shape_.w; }
    std::size_t c() const { return shape_.c; }

    std::size_t index(std::size_t y, std::size_t x, std::size_t ch) const {
        return (y * shape_.w + x) * shape_.c + ch;
    }
    double& at(std::size_t y, std::size_t x, std::size_t ch) { return data_[index(y, x, ch)]; }
    const double& at(std::size_t y, std::size_t x, std::size_t ch) const { return data_[index(y, x, ch)]; }

    double& operator[](std::size_t i) { return data_[i]; }
    const double& operator[](std::size_t i) const { return data_[i]; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    Tensor reshaped(Shape shape) const;
    bool all_finite() const;
    double min() const;
    double max() const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

// `.t3` files: three u32 little-endian (h, w, c), then h*w*c little-endian
// float32 values in row-major order.
void write_t3(const std::filesystem::path& path, const Tensor& t);
Tensor read_t3(const std::filesystem::path& path);

std::vector<unsigned char> encode_t3(const Tensor& t);
Tensor decode_t3(std::span<const unsigned char> bytes);

}  // namespace xaib
