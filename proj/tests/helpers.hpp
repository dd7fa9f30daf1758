#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "xaib/compiler.hpp"
#include "xaib/dataset.hpp"
#include "xaib/rng.hpp"
#include "xaib/tensor.hpp"

namespace xaib::test {

// Compiled once per test binary.
inline const CompiledModel& model(int id) {
    static const std::array<CompiledModel, 5> models{compile_model(0), compile_model(1), compile_model(2),
                                                     compile_model(3), compile_model(4)};
    return models.at(static_cast<std::size_t>(id));
}

inline const std::vector<Example>& test_set(int id) {
    static std::array<std::vector<Example>, 5> sets;
    auto& s = sets.at(static_cast<std::size_t>(id));
    if (s.empty()) s = build_test_set(model(id), kDefaultPerClass, 2024);
    return s;
}

inline Tensor random_tensor(Rng& rng, Shape s, double lo = 0.0, double hi = 1.0) {
    Tensor t(s);
    for (auto& v : t.values()) v = lo + (hi - lo) * rng.uniform();
    return t;
}

// Values biased toward the edge cases of the metrics: exact zeros, +-1, repeats.
inline Tensor toy_tensor(Rng& rng, Shape s) {
    static constexpr std::array<double, 7> special{0.0, 0.0, 1.0, -1.0, 0.5, -0.5, 0.25};
    Tensor t(s);
    for (auto& v : t.values()) {
        const double r = rng.uniform();
        if (r < 0.5) {
            v = special[rng.below(special.size())];
        } else {
            v = -1.0 + 2.0 * rng.uniform();
        }
    }
    return t;
}

inline std::vector<std::size_t> activation_pattern(const Network& net, const Tensor& x) {
    return activation_pattern(net, forward(net, x).trace);
}

// True when x, x + h e_i and x - h e_i share one linear piece for every probed i.
inline bool kink_free(const Network& net, const Tensor& x, const std::vector<std::size_t>& probes, double h) {
    const auto base = activation_pattern(net, x);
    for (std::size_t i : probes) {
        for (double s : {h, -h}) {
            Tensor y = x;
            y[i] += s;
            if (activation_pattern(net, y) != base) return false;
        }
    }
    return true;
}

// A test example with uniform noise and a random contrast change.
inline Tensor perturbed_example(Rng& rng, int model_id) {
    const auto& set = test_set(model_id);
    Tensor x = set[rng.below(set.size())].image;
    const double a = 0.6 + 0.8 * rng.uniform();
    for (auto& v : x.values()) v = std::clamp(a * v + 0.2 * rng.uniform(), 0.0, 1.0);
    return x;
}

}  // namespace xaib::test
