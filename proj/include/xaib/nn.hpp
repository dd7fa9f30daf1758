#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "xaib/tensor.hpp"

namespace xaib {

enum class LayerKind { MaxPool, Conv2D, Dense, Flatten };
enum class Activation { None, ClippedReLU };

// Backward rule applied at every clipped-ReLU.
//  Standard: gradient passes where the forward pre-activation is in (0, 1].
//  Deconv:   gradient passes where the incoming gradient is positive.
//  Guided:   both conditions.
enum class ReluRule { Standard, Guided, Deconv };

std::string to_string(LayerKind k);

inline double clipped_relu(double x) { return x <= 0.0 ? 0.0 : (x >= 1.0 ? 1.0 : x); }

struct Layer {
    LayerKind kind = LayerKind::Flatten;
    std::string name;
    std::size_t kh = 1, kw = 1;  // MaxPool / Conv2D
    std::size_t sh = 1, sw = 1;
    std::size_t n_in = 0, n_out = 0;  // Conv2D channels, Dense units
    std::vector<double> weights;      // Conv2D: (kh, kw, n_in, n_out); Dense: (n_in, n_out)
    std::vector<double> bias;         // n_out
    Activation activation = Activation::None;

    static Layer max_pool(std::string name, std::size_t k, std::size_t stride);
    static Layer conv2d(std::string name, std::size_t kh, std::size_t kw, std::size_t stride, std::size_t c_in,
                        std::size_t c_out);
    static Layer dense(std::string name, std::size_t n_in, std::size_t n_out);
    static Layer flatten(std::string name);

    double& conv_weight(std::size_t ky, std::size_t kx, std::size_t ci, std::size_t co) {
        return weights[((ky * kw + kx) * n_in + ci) * n_out + co];
    }
    double conv_weight(std::size_t ky, std::size_t kx, std::size_t ci, std::size_t co) const {
        return weights[((ky * kw + kx) * n_in + ci) * n_out + co];
    }
    double& dense_weight(std::size_t i, std::size_t o) { return weights[i * n_out + o]; }
    double dense_weight(std::size_t i, std::size_t o) const { return weights[i * n_out + o]; }

    // Throws std::invalid_argument naming this layer when `in` is incompatible.
    Shape output_shape(const Shape& in) const;
};

class Network {
public:
    Network() = default;
    Network(Shape input_shape, std::vector<Layer> layers);

    const Shape& input_shape() const { return input_shape_; }
    const std::vector<Layer>& layers() const { return layers_; }
    const Layer& layer(std::size_t i) const { return layers_.at(i); }
    std::size_t layer_index(const std::string& name) const;
    // Output shape of layer i.
    const Shape& shape(std::size_t i) const { return shapes_.at(i); }
    std::size_t num_outputs() const { return shapes_.empty() ? 0 : shapes_.back().size(); }

private:
    Shape input_shape_;
    std::vector<Layer> layers_;
    std::vector<Shape> shapes_;
};

struct ForwardTrace {
    std::vector<Tensor> pre;   // pre-activation per layer (same as post for layers without activation)
    std::vector<Tensor> post;  // post-activation per layer
    std::vector<std::vector<std::size_t>> argmax;  // MaxPool: flat input index per output element

    std::size_t size() const { return post.size(); }
    const Tensor& output() const { return post.back(); }
};

struct ForwardResult {
    std::vector<double> output;
    ForwardTrace trace;
};

ForwardResult forward(const Network& net, const Tensor& input);
// Output scores only.
std::vector<double> predict(const Network& net, const Tensor& input);
double class_score(const Network& net, const Tensor& input, std::size_t class_index);

// Clip region of every activation (0: <= 0, 1: (0, 1], 2: > 1) followed by
// every max-pool argmax. Inputs with equal patterns lie on one linear piece.
std::vector<std::size_t> activation_pattern(const Network& net, const ForwardTrace& trace);

struct BackwardResult {
    Tensor input_grad;
    std::vector<Tensor> output_grads;  // gradient w.r.t. post[i] for every layer i
};

// Reverse pass seeded with `output_seed` (d loss / d output).
BackwardResult backward(const Network& net, const ForwardTrace& trace, std::span<const double> output_seed,
                        ReluRule rule);

Tensor input_gradient(const Network& net, const Tensor& input, std::size_t class_index,
                      ReluRule rule = ReluRule::Standard);

}  // namespace xaib
