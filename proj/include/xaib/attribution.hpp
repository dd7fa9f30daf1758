#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "xaib/compiler.hpp"
#include "xaib/rng.hpp"
#include "xaib/tensor.hpp"

namespace xaib {

enum class Method {
    GradCAM,
    GradCAMpp,
    Saliency,
    DeconvNet,
    GradientInput,
    GuidedBackprop,
    IntegratedGradients,
    SmoothGrad,
    SquareGrad,
    VarGrad,
    Occlusion,
    RISE,
    IdentityGT,  // returns the reference GT; for checking the metric pipeline
};

enum class Dims { D2, D3 };

std::string to_string(Method m);
std::string to_string(Dims d);
// Accepts the names printed by to_string, case-insensitively.
Method method_from_string(const std::string& name);

// The twelve benchmarked methods, in report column order.
const std::vector<Method>& benchmark_methods();

Dims native_dims(Method m);
bool is_sampled(Method m);

class AttributionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MethodConfig {
    int ig_steps = 64;
    std::optional<Tensor> ig_baseline;  // zero image when unset
    int sg_samples = 25;
    double sg_sigma = 0.15;  // fraction of the input's value range
    int occlusion_ph = 4, occlusion_pw = 4;
    int occlusion_sh = 2, occlusion_sw = 2;
    double occlusion_fill = 0.0;
    int rise_masks = 2000;
    int rise_cell = 6;  // mask grid is rise_cell x rise_cell
    double rise_keep_prob = 0.5;
    std::uint64_t rng_seed = 0;

    // Throws AttributionError on out-of-range values.
    void validate() const;
};

struct Explanation {
    Method method = Method::Saliency;
    Dims dims = Dims::D3;
    Tensor raw;
    Tensor values;  // normalize(raw)
    double elapsed_ms = 0.0;
};

// `reference` is only read by IdentityGT.
Explanation attribute(Method method, const CompiledModel& model, const Tensor& input, int class_index,
                      const MethodConfig& config = {}, const Tensor* reference = nullptr);

// Unnormalized method output, without timing.
Tensor attribute_raw(Method method, const CompiledModel& model, const Tensor& input, int class_index,
                     const MethodConfig& config = {}, const Tensor* reference = nullptr);

// Building blocks, exposed for tests.
Tensor bilinear_resize(const Tensor& src, std::size_t h, std::size_t w);
Tensor rise_mask(Rng& rng, std::size_t h, std::size_t w, int cell, double keep_prob);
Tensor abs_max_channels(const Tensor& t);

}  // namespace xaib
