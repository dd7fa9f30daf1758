#include "xaib/nn.hpp"

#include <limits>
#include <stdexcept>

namespace xaib {

std::string to_string(LayerKind k) {
    switch (k) {
        case LayerKind::MaxPool: return "MaxPool";
        case LayerKind::Conv2D: return "Conv2D";
        case LayerKind::Dense: return "Dense";
        case LayerKind::Flatten: return "Flatten";
    }
    return "?";
}

Layer Layer::max_pool(std::string name, std::size_t k, std::size_t stride) {
    Layer l;
    l.kind = LayerKind::MaxPool;
    l.name = std::move(name);
    l.kh = l.kw = k;
    l.sh = l.sw = stride;
    return l;
}

Layer Layer::conv2d(std::string name, std::size_t kh, std::size_t kw, std::size_t stride, std::size_t c_in,
                    std::size_t c_out) {
    Layer l;
    l.kind = LayerKind::Conv2D;
    l.name = std::move(name);
    l.kh = kh;
    l.kw = kw;
    l.sh = l.sw = stride;
    l.n_in = c_in;
    l.n_out = c_out;
    l.weights.assign(kh * kw * c_in * c_out, 0.0);
    l.bias.assign(c_out, 0.0);
    l.activation = Activation::ClippedReLU;
    return l;
}

Layer Layer::dense(std::string name, std::size_t n_in, std::size_t n_out) {
    Layer l;
    l.kind = LayerKind::Dense;
    l.name = std::move(name);
    l.n_in = n_in;
    l.n_out = n_out;
    l.weights.assign(n_in * n_out, 0.0);
    l.bias.assign(n_out, 0.0);
    l.activation = Activation::ClippedReLU;
    return l;
}

Layer Layer::flatten(std::string name) {
    Layer l;
    l.kind = LayerKind::Flatten;
    l.name = std::move(name);
    return l;
}

Shape Layer::output_shape(const Shape& in) const {
    auto fail = [&](const std::string& why) -> Shape {
        throw std::invalid_argument("layer '" + name + "' (" + to_string(kind) + "): " + why + "; input shape " +
                                    to_string(in));
    };
    switch (kind) {
        case LayerKind::MaxPool:
            if (in.h < kh || in.w < kw) return fail("input smaller than pool window");
            return {(in.h - kh) / sh + 1, (in.w - kw) / sw + 1, in.c};
        case LayerKind::Conv2D:
            if (in.c != n_in) return fail("expected " + std::to_string(n_in) + " input channels");
            if (in.h < kh || in.w < kw) return fail("input smaller than kernel");
            return {(in.h - kh) / sh + 1, (in.w - kw) / sw + 1, n_out};
        case LayerKind::Dense:
            if (in.size() != n_in || in.h != 1 || in.w != 1) {
                return fail("expected a flat vector of " + std::to_string(n_in) + " values");
            }
            return {1, 1, n_out};
        case LayerKind::Flatten: return {1, 1, in.size()};
    }
    return fail("unknown layer kind");
}

Network::Network(Shape input_shape, std::vector<Layer> layers)
    : input_shape_(input_shape), layers_(std::move(layers)) {
    Shape s = input_shape_;
    shapes_.reserve(layers_.size());
    for (const auto& l : layers_) {
        s = l.output_shape(s);
        shapes_.push_back(s);
    }
}

std::size_t Network::layer_index(const std::string& name) const {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (layers_[i].name == name) return i;
    }
    throw std::invalid_argument("no layer named '" + name + "'");
}

namespace {

void max_pool_forward(const Layer& l, const Tensor& in, Tensor& out, std::vector<std::size_t>* argmax) {
    const Shape os = out.shape();
    if (argmax) argmax->assign(os.size(), 0);
    for (std::size_t oy = 0; oy < os.h; ++oy) {
        for (std::size_t ox = 0; ox < os.w; ++ox) {
            for (std::size_t ch = 0; ch < os.c; ++ch) {
                double best = -std::numeric_limits<double>::infinity();
                std::size_t best_idx = 0;
                // First maximum in row-major scan wins ties.
                for (std::size_t ky = 0; ky < l.kh; ++ky) {
                    for (std::size_t kx = 0; kx < l.kw; ++kx) {
                        const std::size_t idx = in.index(oy * l.sh + ky, ox * l.sw + kx, ch);
                        if (in[idx] > best) {
                            best = in[idx];
                            best_idx = idx;
                        }
                    }
                }
                const std::size_t o = out.index(oy, ox, ch);
                out[o] = best;
                if (argmax) (*argmax)[o] = best_idx;
            }
        }
    }
}

void conv_forward(const Layer& l, const Tensor& in, Tensor& pre) {
    const Shape os = pre.shape();
    for (std::size_t oy = 0; oy < os.h; ++oy) {
        for (std::size_t ox = 0; ox < os.w; ++ox) {
            double* acc = &pre[pre.index(oy, ox, 0)];
            for (std::size_t co = 0; co < l.n_out; ++co) acc[co] = l.bias[co];
            for (std::size_t ky = 0; ky < l.kh; ++ky) {
                for (std::size_t kx = 0; kx < l.kw; ++kx) {
                    const double* px = &in[in.index(oy * l.sh + ky, ox * l.sw + kx, 0)];
                    const double* wk = &l.weights[(ky * l.kw + kx) * l.n_in * l.n_out];
                    for (std::size_t ci = 0; ci < l.n_in; ++ci) {
                        const double v = px[ci];
                        if (v == 0.0) continue;
                        const double* wrow = wk + ci * l.n_out;
                        for (std::size_t co = 0; co < l.n_out; ++co) acc[co] += v * wrow[co];
                    }
                }
            }
        }
    }
}

void dense_forward(const Layer& l, const Tensor& in, Tensor& pre) {
    for (std::size_t o = 0; o < l.n_out; ++o) pre[o] = l.bias[o];
    for (std::size_t i = 0; i < l.n_in; ++i) {
        const double v = in[i];
        if (v == 0.0) continue;
        const double* wrow = &l.weights[i * l.n_out];
        for (std::size_t o = 0; o < l.n_out; ++o) pre[o] += v * wrow[o];
    }
}

Tensor layer_pre(const Layer& l, const Shape& os, const Tensor& in, std::vector<std::size_t>* argmax) {
    Tensor pre(os);
    switch (l.kind) {
        case LayerKind::MaxPool: max_pool_forward(l, in, pre, argmax); break;
        case LayerKind::Conv2D: conv_forward(l, in, pre); break;
        case LayerKind::Dense: dense_forward(l, in, pre); break;
        case LayerKind::Flatten: pre = in.reshaped(os); break;
    }
    return pre;
}

Tensor activate(const Layer& l, const Tensor& pre) {
    if (l.activation == Activation::None) return pre;
    Tensor post = pre;
    for (auto& v : post.values()) v = clipped_relu(v);
    return post;
}

void check_input(const Network& net, const Tensor& input) {
    if (input.shape() != net.input_shape()) {
        const std::string first = net.layers().empty() ? "<none>" : net.layers().front().name;
        throw std::invalid_argument("input shape " + to_string(input.shape()) + " does not match network input " +
                                    to_string(net.input_shape()) + " expected by layer '" + first + "'");
    }
}

bool passes(ReluRule rule, double pre, double g) {
    const bool in_range = pre > 0.0 && pre <= 1.0;
    switch (rule) {
        case ReluRule::Standard: return in_range;
        case ReluRule::Deconv: return g > 0.0;
        case ReluRule::Guided: return in_range && g > 0.0;
    }
    return false;
}

}  // namespace

std::vector<std::size_t> activation_pattern(const Network& net, const ForwardTrace& trace) {
    std::vector<std::size_t> out;
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        if (net.layer(l).activation == Activation::ClippedReLU) {
            for (double p : trace.pre[l].values()) out.push_back(p <= 0.0 ? 0 : (p <= 1.0 ? 1 : 2));
        }
        if (net.layer(l).kind == LayerKind::MaxPool) {
            out.insert(out.end(), trace.argmax[l].begin(), trace.argmax[l].end());
        }
    }
    return out;
}

ForwardResult forward(const Network& net, const Tensor& input) {
    check_input(net, input);
    ForwardResult r;
    auto& t = r.trace;
    const std::size_t n = net.layers().size();
    t.pre.reserve(n);
    t.post.reserve(n);
    t.argmax.resize(n);
    const Tensor* cur = &input;
    for (std::size_t i = 0; i < n; ++i) {
        const Layer& l = net.layer(i);
        t.pre.push_back(layer_pre(l, net.shape(i), *cur, l.kind == LayerKind::MaxPool ? &t.argmax[i] : nullptr));
        t.post.push_back(activate(l, t.pre.back()));
        cur = &t.post.back();
    }
    r.output.assign(t.output().values().begin(), t.output().values().end());
    return r;
}

std::vector<double> predict(const Network& net, const Tensor& input) {
    check_input(net, input);
    Tensor cur = input;
    for (std::size_t i = 0; i < net.layers().size(); ++i) {
        const Layer& l = net.layer(i);
        Tensor pre = layer_pre(l, net.shape(i), cur, nullptr);
        if (l.activation == Activation::ClippedReLU) {
            for (auto& v : pre.values()) v = clipped_relu(v);
        }
        cur = std::move(pre);
    }
    return {cur.values().begin(), cur.values().end()};
}

double class_score(const Network& net, const Tensor& input, std::size_t class_index) {
    auto out = predict(net, input);
    if (class_index >= out.size()) throw std::out_of_range("class index out of range");
    return out[class_index];
}

BackwardResult backward(const Network& net, const ForwardTrace& trace, std::span<const double> output_seed,
                        ReluRule rule) {
    const std::size_t n = net.layers().size();
    if (trace.size() != n) throw std::invalid_argument("trace does not belong to this network");
    if (output_seed.size() != net.num_outputs()) throw std::invalid_argument("seed length mismatch");

    BackwardResult r;
    r.output_grads.resize(n);
    r.output_grads[n - 1] = Tensor(net.shape(n - 1), std::vector<double>(output_seed.begin(), output_seed.end()));

    for (std::size_t i = n; i-- > 0;) {
        const Layer& l = net.layer(i);
        const Shape in_shape = i == 0 ? net.input_shape() : net.shape(i - 1);
        Tensor g_pre = r.output_grads[i];
        if (l.activation == Activation::ClippedReLU) {
            const Tensor& pre = trace.pre[i];
            for (std::size_t k = 0; k < g_pre.size(); ++k) {
                if (!passes(rule, pre[k], g_pre[k])) g_pre[k] = 0.0;
            }
        }
        Tensor g_in(in_shape);
        switch (l.kind) {
            case LayerKind::Flatten: g_in = g_pre.reshaped(in_shape); break;
            case LayerKind::MaxPool: {
                const auto& am = trace.argmax[i];
                for (std::size_t k = 0; k < g_pre.size(); ++k) g_in[am[k]] += g_pre[k];
                break;
            }
            case LayerKind::Dense: {
                for (std::size_t a = 0; a < l.n_in; ++a) {
                    const double* wrow = &l.weights[a * l.n_out];
                    double s = 0.0;
                    for (std::size_t o = 0; o < l.n_out; ++o) s += wrow[o] * g_pre[o];
                    g_in[a] = s;
                }
                break;
            }
            case LayerKind::Conv2D: {
                const Shape os = g_pre.shape();
                for (std::size_t oy = 0; oy < os.h; ++oy) {
                    for (std::size_t ox = 0; ox < os.w; ++ox) {
                        const double* go = &g_pre[g_pre.index(oy, ox, 0)];
                        for (std::size_t ky = 0; ky < l.kh; ++ky) {
                            for (std::size_t kx = 0; kx < l.kw; ++kx) {
                                double* gi = &g_in[g_in.index(oy * l.sh + ky, ox * l.sw + kx, 0)];
                                const double* wk = &l.weights[(ky * l.kw + kx) * l.n_in * l.n_out];
                                for (std::size_t ci = 0; ci < l.n_in; ++ci) {
                                    const double* wrow = wk + ci * l.n_out;
                                    double s = 0.0;
                                    for (std::size_t co = 0; co < l.n_out; ++co) s += wrow[co] * go[co];
                                    gi[ci] += s;
                                }
                            }
                        }
                    }
                }
                break;
            }
        }
        if (i == 0) {
            r.input_grad = std::move(g_in);
        } else {
            r.output_grads[i - 1] = std::move(g_in);
        }
    }
    return r;
}

Tensor input_gradient(const Network& net, const Tensor& input, std::size_t class_index, ReluRule rule) {
    auto fr = forward(net, input);
    if (class_index >= fr.output.size()) {
        throw std::out_of_range("class index " + std::to_string(class_index) + " out of range for " +
                                std::to_string(fr.output.size()) + " outputs");
    }
    std::vector<double> seed(fr.output.size(), 0.0);
    seed[class_index] = 1.0;
    return backward(net, fr.trace, seed, rule).input_grad;
}

}  // namespace xaib
