#include "xaib/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

namespace xaib {

std::string to_string(const Shape& s) {
    return "(" + std::to_string(s.h) + "," + std::to_string(s.w) + "," + std::to_string(s.c) + ")";
}

Tensor::Tensor(Shape shape, double fill) : shape_(shape), data_(shape.size(), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size()) {
        throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                    " does not match shape " + to_string(shape_));
    }
}

Tensor Tensor::reshaped(Shape shape) const {
    if (shape.size() != data_.size()) {
        throw std::invalid_argument("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
    }
    return Tensor(shape, data_);
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Tensor::min() const {
    return data_.empty() ? 0.0 : *std::min_element(data_.begin(), data_.end());
}

double Tensor::max() const {
    return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end());
}

namespace {

static_assert(sizeof(float) == 4);

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(std::span<const unsigned char> b, std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[off + i]) << (8 * i);
    return v;
}

}  // namespace

std::vector<unsigned char> encode_t3(const Tensor& t) {
    std::vector<unsigned char> out;
    out.reserve(12 + 4 * t.size());
    put_u32(out, static_cast<std::uint32_t>(t.h()));
    put_u32(out, static_cast<std::uint32_t>(t.w()));
    put_u32(out, static_cast<std::uint32_t>(t.c()));
    for (double v : t.values()) {
        put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
    return out;
}

Tensor decode_t3(std::span<const unsigned char> bytes) {
    if (bytes.size() < 12) throw std::runtime_error("t3: truncated header");
    Shape s{get_u32(bytes, 0), get_u32(bytes, 4), get_u32(bytes, 8)};
    if (bytes.size() != 12 + 4 * s.size()) {
        throw std::runtime_error("t3: payload size does not match header " + to_string(s));
    }
    std::vector<double> data(s.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        data[i] = std::bit_cast<float>(get_u32(bytes, 12 + 4 * i));
    }
    return Tensor(s, std::move(data));
}

void write_t3(const std::filesystem::path& path, const Tensor& t) {
    auto bytes = encode_t3(t);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Tensor read_t3(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    try {
        return decode_t3(bytes);
    } catch (const std::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

}  // namespace xaib
