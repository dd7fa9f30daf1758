#include "xaib/attribution.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <cmath>
#include <functional>

#include "xaib/gt.hpp"

namespace xaib {

namespace {

struct MethodInfo {
    Method method;
    const char* name;
    Dims dims;
    bool sampled;
};

constexpr std::array<MethodInfo, 13> kMethods{{
    {Method::GradCAM, "gradcam", Dims::D2, false},
    {Method::GradCAMpp, "gradcampp", Dims::D2, false},
    {Method::Saliency, "saliency", Dims::D2, false},
    {Method::DeconvNet, "deconvnet", Dims::D3, false},
    {Method::GradientInput, "gradient-input", Dims::D3, false},
    {Method::GuidedBackprop, "guided-backprop", Dims::D3, false},
    {Method::IntegratedGradients, "integrated-gradients", Dims::D3, false},
    {Method::SmoothGrad, "smoothgrad", Dims::D3, true},
    {Method::SquareGrad, "squaregrad", Dims::D3, true},
    {Method::VarGrad, "vargrad", Dims::D3, true},
    {Method::Occlusion, "occlusion", Dims::D2, false},
    {Method::RISE, "rise", Dims::D2, true},
    {Method::IdentityGT, "identity-gt", Dims::D3, false},
}};

const MethodInfo& info(Method m) {
    for (const auto& i : kMethods) {
        if (i.method == m) return i;
    }
    throw AttributionError("unknown method");
}

void check_input(const CompiledModel& model, const Tensor& input, int class_index) {
    if (input.shape() != model.network.input_shape()) {
        throw AttributionError("input shape " + to_string(input.shape()) + " does not match model input " +
                               to_string(model.network.input_shape()));
    }
    if (class_index < 0 || static_cast<std::size_t>(class_index) >= model.network.num_outputs()) {
        throw AttributionError("class index " + std::to_string(class_index) + " out of range");
    }
}

Tensor gradient(const CompiledModel& model, const Tensor& x, int c, ReluRule rule = ReluRule::Standard) {
    return input_gradient(model.network, x, static_cast<std::size_t>(c), rule);
}

double score(const CompiledModel& model, const Tensor& x, int c) {
    return class_score(model.network, x, static_cast<std::size_t>(c));
}

Tensor multiply(const Tensor& a, const Tensor& b) {
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
    return out;
}

// The path crosses finitely many linear pieces. A step whose ends share a
// pattern lies inside one piece, so its midpoint gradient is exact; other
// steps are bisected until they do or become negligibly short.
Tensor integrated_gradients(const CompiledModel& model, const Tensor& x, int c, const MethodConfig& cfg) {
    const Tensor base = cfg.ig_baseline ? *cfg.ig_baseline : Tensor(x.shape());
    if (base.shape() != x.shape()) throw AttributionError("IG baseline shape does not match input");
    const Network& net = model.network;
    Tensor sum(x.shape());
    Tensor point(x.shape());
    const auto at = [&](double alpha) -> const Tensor& {
        for (std::size_t i = 0; i < x.size(); ++i) point[i] = base[i] + alpha * (x[i] - base[i]);
        return point;
    };
    const auto pattern = [&](double alpha) { return activation_pattern(net, forward(net, at(alpha)).trace); };
    const auto add = [&](double a, double b) {
        const Tensor g = gradient(model, at(0.5 * (a + b)), c);
        for (std::size_t i = 0; i < x.size(); ++i) sum[i] += (b - a) * g[i];
    };
    const std::function<void(double, double, const std::vector<std::size_t>&, const std::vector<std::size_t>&)>
        segment = [&](double a, double b, const auto& pa, const auto& pb) {
            if (pa == pb || b - a < 1e-9) {
                add(a, b);
                return;
            }
            const double m = 0.5 * (a + b);
            const auto pm = pattern(m);
            segment(a, m, pa, pm);
            segment(m, b, pm, pb);
        };
    auto prev = pattern(0.0);
    for (int k = 0; k < cfg.ig_steps; ++k) {
        const double a = static_cast<double>(k) / cfg.ig_steps;
        const double b = static_cast<double>(k + 1) / cfg.ig_steps;
        auto next = pattern(b);
        segment(a, b, prev, next);
        prev = std::move(next);
    }
    for (std::size_t i = 0; i < x.size(); ++i) sum[i] *= x[i] - base[i];
    return sum;
}

// Mean, mean of squares or variance of gradients under Gaussian input noise.
Tensor noisy_gradients(Method m, const CompiledModel& model, const Tensor& x, int c, const MethodConfig& cfg) {
    const double sigma = cfg.sg_sigma * (x.max() - x.min());
    Rng rng(cfg.rng_seed);
    Tensor mean(x.shape()), m2(x.shape());
    Tensor noisy(x.shape());
    for (int n = 1; n <= cfg.sg_samples; ++n) {
        for (std::size_t i = 0; i < x.size(); ++i) noisy[i] = x[i] + sigma * rng.normal();
        const Tensor g = gradient(model, noisy, c);
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (m == Method::SquareGrad) {
                mean[i] += (g[i] * g[i] - mean[i]) / n;
                continue;
            }
            // Welford update.
            const double d = g[i] - mean[i];
            mean[i] += d / n;
            m2[i] += d * (g[i] - mean[i]);
        }
    }
    if (m != Method::VarGrad) return mean;
    for (auto& v : m2.values()) v /= cfg.sg_samples;
    return m2;
}

Tensor grad_cam(Method m, const CompiledModel& model, const Tensor& x, int c) {
    const Network& net = model.network;
    const auto fr = forward(net, x);
    std::vector<double> seed(net.num_outputs(), 0.0);
    seed[static_cast<std::size_t>(c)] = 1.0;
    const auto br = backward(net, fr.trace, seed, ReluRule::Standard);
    const Tensor& a = fr.trace.post[layer::kConv3];
    const Tensor& g = br.output_grads[layer::kConv3];
    const std::size_t hw = a.h() * a.w();
    std::vector<double> weight(a.c(), 0.0);
    for (std::size_t k = 0; k < a.c(); ++k) {
        if (m == Method::GradCAM) {
            for (std::size_t p = 0; p < hw; ++p) weight[k] += g[p * a.c() + k];
            weight[k] /= static_cast<double>(hw);
            continue;
        }
        double sum_a = 0.0;
        for (std::size_t p = 0; p < hw; ++p) sum_a += a[p * a.c() + k];
        for (std::size_t p = 0; p < hw; ++p) {
            const double gv = g[p * a.c() + k];
            const double g2 = gv * gv;
            const double denom = 2.0 * g2 + sum_a * g2 * gv;
            const double alpha = denom != 0.0 ? g2 / denom : 0.0;
            weight[k] += alpha * std::max(gv, 0.0);
        }
    }
    Tensor cam(Shape{a.h(), a.w(), 1});
    for (std::size_t p = 0; p < hw; ++p) {
        double s = 0.0;
        for (std::size_t k = 0; k < a.c(); ++k) s += weight[k] * a[p * a.c() + k];
        cam[p] = std::max(s, 0.0);
    }
    return bilinear_resize(cam, x.h(), x.w());
}

Tensor occlusion(const CompiledModel& model, const Tensor& x, int c, const MethodConfig& cfg) {
    const double base = score(model, x, c);
    Tensor sum(Shape{x.h(), x.w(), 1}), count(Shape{x.h(), x.w(), 1});
    auto starts = [](std::size_t n, std::size_t patch, std::size_t stride) {
        std::vector<std::size_t> out;
        if (patch >= n) return std::vector<std::size_t>{0};
        for (std::size_t s = 0; s + patch <= n; s += stride) out.push_back(s);
        if (out.back() + patch < n) out.push_back(n - patch);
        return out;
    };
    const auto ph = std::min<std::size_t>(static_cast<std::size_t>(cfg.occlusion_ph), x.h());
    const auto pw = std::min<std::size_t>(static_cast<std::size_t>(cfg.occlusion_pw), x.w());
    Tensor occluded = x;
    for (std::size_t y0 : starts(x.h(), ph, static_cast<std::size_t>(cfg.occlusion_sh))) {
        for (std::size_t x0 : starts(x.w(), pw, static_cast<std::size_t>(cfg.occlusion_sw))) {
            for (std::size_t y = y0; y < y0 + ph; ++y)
                for (std::size_t xx = x0; xx < x0 + pw; ++xx)
                    for (std::size_t ch = 0; ch < x.c(); ++ch) occluded.at(y, xx, ch) = cfg.occlusion_fill;
            const double drop = base - score(model, occluded, c);
            for (std::size_t y = y0; y < y0 + ph; ++y) {
                for (std::size_t xx = x0; xx < x0 + pw; ++xx) {
                    sum.at(y, xx, 0) += drop;
                    count.at(y, xx, 0) += 1.0;
                    for (std::size_t ch = 0; ch < x.c(); ++ch) occluded.at(y, xx, ch) = x.at(y, xx, ch);
                }
            }
        }
    }
    for (std::size_t i = 0; i < sum.size(); ++i) {
        if (count[i] > 0.0) sum[i] /= count[i];
    }
    return sum;
}

Tensor rise(const CompiledModel& model, const Tensor& x, int c, const MethodConfig& cfg) {
    Rng rng(cfg.rng_seed);
    const auto n = static_cast<std::size_t>(cfg.rise_masks);
    std::vector<Tensor> masks;
    std::vector<double> scores;
    masks.reserve(n);
    scores.reserve(n);
    Tensor masked(x.shape());
    for (std::size_t i = 0; i < n; ++i) {
        Tensor m = rise_mask(rng, x.h(), x.w(), cfg.rise_cell, cfg.rise_keep_prob);
        for (std::size_t p = 0; p < m.size(); ++p)
            for (std::size_t ch = 0; ch < x.c(); ++ch) masked[p * x.c() + ch] = x[p * x.c() + ch] * m[p];
        scores.push_back(score(model, masked, c));
        masks.push_back(std::move(m));
    }
    double mean = 0.0;
    for (double s : scores) mean += s;
    mean /= static_cast<double>(n);
    Tensor sal(Shape{x.h(), x.w(), 1});
    for (std::size_t i = 0; i < n; ++i) {
        const double w = scores[i] - mean;
        if (w == 0.0) continue;
        for (std::size_t p = 0; p < sal.size(); ++p) sal[p] += w * masks[i][p];
    }
    const double scale = 1.0 / (static_cast<double>(n) * cfg.rise_keep_prob);
    for (auto& v : sal.values()) v *= scale;
    return sal;
}

std::string lower(std::string s) {
    for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return s;
}

}  // namespace

std::string to_string(Method m) { return info(m).name; }

std::string to_string(Dims d) { return d == Dims::D2 ? "2D" : "3D"; }

Method method_from_string(const std::string& name) {
    const std::string key = lower(name);
    for (const auto& i : kMethods) {
        if (key == i.name) return i.method;
    }
    throw AttributionError("unknown method '" + name + "'");
}

const std::vector<Method>& benchmark_methods() {
    static const std::vector<Method> methods = [] {
        std::vector<Method> out;
        for (const auto& i : kMethods) {
            if (i.method != Method::IdentityGT) out.push_back(i.method);
        }
        return out;
    }();
    return methods;
}

Dims native_dims(Method m) { return info(m).dims; }

bool is_sampled(Method m) { return info(m).sampled; }

void MethodConfig::validate() const {
    auto positive = [](int v, const char* what) {
        if (v < 1) throw AttributionError(std::string(what) + " must be at least 1");
    };
    positive(ig_steps, "ig_steps");
    positive(sg_samples, "sg_samples");
    positive(occlusion_ph, "occlusion patch height");
    positive(occlusion_pw, "occlusion patch width");
    positive(occlusion_sh, "occlusion stride");
    positive(occlusion_sw, "occlusion stride");
    positive(rise_masks, "rise_masks");
    positive(rise_cell, "rise_cell");
    if (!(sg_sigma >= 0.0) || !std::isfinite(sg_sigma)) throw AttributionError("sg_sigma must be non-negative");
    if (!(rise_keep_prob > 0.0 && rise_keep_prob < 1.0)) throw AttributionError("rise_keep_prob must be in (0, 1)");
    if (!std::isfinite(occlusion_fill)) throw AttributionError("occlusion_fill must be finite");
}

Tensor abs_max_channels(const Tensor& t) {
    Tensor out(Shape{t.h(), t.w(), 1});
    for (std::size_t p = 0; p < out.size(); ++p) {
        double m = 0.0;
        for (std::size_t ch = 0; ch < t.c(); ++ch) m = std::max(m, std::abs(t[p * t.c() + ch]));
        out[p] = m;
    }
    return out;
}

Tensor bilinear_resize(const Tensor& src, std::size_t h, std::size_t w) {
    Tensor out(Shape{h, w, src.c()});
    auto axis = [](std::size_t dst, std::size_t n_dst, std::size_t n_src, std::size_t& i0, std::size_t& i1,
                   double& f) {
        double s = (static_cast<double>(dst) + 0.5) * static_cast<double>(n_src) / static_cast<double>(n_dst) - 0.5;
        s = std::clamp(s, 0.0, static_cast<double>(n_src - 1));
        i0 = static_cast<std::size_t>(std::floor(s));
        i1 = std::min(i0 + 1, n_src - 1);
        f = s - static_cast<double>(i0);
    };
    for (std::size_t y = 0; y < h; ++y) {
        std::size_t y0, y1;
        double fy;
        axis(y, h, src.h(), y0, y1, fy);
        for (std::size_t x = 0; x < w; ++x) {
            std::size_t x0, x1;
            double fx;
            axis(x, w, src.w(), x0, x1, fx);
            for (std::size_t ch = 0; ch < src.c(); ++ch) {
                const double top = src.at(y0, x0, ch) * (1 - fx) + src.at(y0, x1, ch) * fx;
                const double bot = src.at(y1, x0, ch) * (1 - fx) + src.at(y1, x1, ch) * fx;
                out.at(y, x, ch) = top * (1 - fy) + bot * fy;
            }
        }
    }
    return out;
}

// Binary cell grid, bilinearly upsampled to one cell beyond the image and
// cropped at a random shift.
Tensor rise_mask(Rng& rng, std::size_t h, std::size_t w, int cell, double keep_prob) {
    const auto s = static_cast<std::size_t>(cell);
    const std::size_t ch = (h + s - 1) / s, cw = (w + s - 1) / s;
    Tensor grid(Shape{s, s, 1});
    for (auto& v : grid.values()) v = rng.bernoulli(keep_prob) ? 1.0 : 0.0;
    const Tensor up = bilinear_resize(grid, (s + 1) * ch, (s + 1) * cw);
    const std::size_t dy = rng.below(ch), dx = rng.below(cw);
    Tensor out(Shape{h, w, 1});
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) out.at(y, x, 0) = up.at(y + dy, x + dx, 0);
    return out;
}

Tensor attribute_raw(Method method, const CompiledModel& model, const Tensor& input, int class_index,
                     const MethodConfig& config, const Tensor* reference) {
    config.validate();
    check_input(model, input, class_index);
    Tensor out;
    switch (method) {
        case Method::Saliency: out = abs_max_channels(gradient(model, input, class_index)); break;
        case Method::GradientInput: out = multiply(gradient(model, input, class_index), input); break;
        case Method::GuidedBackprop: out = gradient(model, input, class_index, ReluRule::Guided); break;
        case Method::DeconvNet: out = gradient(model, input, class_index, ReluRule::Deconv); break;
        case Method::IntegratedGradients: out = integrated_gradients(model, input, class_index, config); break;
        case Method::SmoothGrad:
        case Method::SquareGrad:
        case Method::VarGrad: out = noisy_gradients(method, model, input, class_index, config); break;
        case Method::GradCAM:
        case Method::GradCAMpp: out = grad_cam(method, model, input, class_index); break;
        case Method::Occlusion: out = occlusion(model, input, class_index, config); break;
        case Method::RISE: out = rise(model, input, class_index, config); break;
        case Method::IdentityGT:
            if (reference == nullptr) throw AttributionError("identity-gt needs a reference ground truth");
            if (reference->shape() != input.shape()) throw AttributionError("reference shape does not match input");
            out = *reference;
            break;
    }
    if (!out.all_finite()) throw AttributionError(to_string(method) + " produced non-finite values");
    return out;
}

Explanation attribute(Method method, const CompiledModel& model, const Tensor& input, int class_index,
                      const MethodConfig& config, const Tensor* reference) {
    Explanation e;
    e.method = method;
    e.dims = native_dims(method);
    const auto t0 = std::chrono::steady_clock::now();
    e.raw = attribute_raw(method, model, input, class_index, config, reference);
    const auto t1 = std::chrono::steady_clock::now();
    e.elapsed_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    e.values = normalize(e.raw);
    return e;
}

}  // namespace xaib
