#pragma once

#include <array>
#include <span>
#include <vector>

#include "xaib/compiler.hpp"
#include "xaib/nn.hpp"
#include "xaib/tensor.hpp"

namespace xaib {

// Unsigned influence split by the parity of negations on the paths that carried it.
struct Influence {
    double positive = 0.0;
    double negative = 0.0;

    bool any() const { return positive != 0.0 || negative != 0.0; }
    double net() const { return positive - negative; }
    Influence flipped() const { return {negative, positive}; }
    Influence scaled(double s) const { return {positive * s, negative * s}; }
    Influence& operator+=(const Influence& o) {
        positive += o.positive;
        negative += o.negative;
        return *this;
    }
};

struct InfluenceMap {
    // Indexed by layer, then by the flat element index of that layer's output
    // tensor. Filled for Conv2D_0..3 and Dense_0..2.
    std::vector<std::vector<Influence>> nodes;
    // concept[id][pos]: influence reaching concept `id` at grid position `pos`.
    std::array<std::array<Influence, 9>, 5> concept_level{};
    int true_class = 0;
};

// Backtracks unit influence from the true-class output node to concept-part
// detectors. AND and both unary operators pass full influence to each input;
// OR splits it equally among its active inputs. Nodes that are inactive on
// the path (below a negation) are handled by De Morgan duality: an inactive
// OR passes full influence to every input, an inactive AND splits it among
// its inactive inputs. Absent concepts reached this way are attributed to the
// parts of their canonical layout.
InfluenceMap backtrack_influence(const CompiledModel& model, const ForwardTrace& trace, int true_class);

struct GroundTruth {
    Tensor gt3d;  // (36, 36, 3), normalized
    Tensor gt2d;  // (36, 36, 1), normalized
};

// `input` is the upscaled 36x36 example, `r0`/`r1` the upscale offsets used for it.
GroundTruth render_gt(const InfluenceMap& influence, const Tensor& input, std::span<const ConceptPartSpec> parts,
                      int r0, int r1);

GroundTruth ground_truth(const CompiledModel& model, const Tensor& input, int r0, int r1, int true_class);

// e / max(|min e|, |max e|); all-zero tensors are returned unchanged.
Tensor normalize(const Tensor& e);

// Per pixel, the channel value furthest from zero (lowest channel on ties).
Tensor to_2d(const Tensor& e3);

}  // namespace xaib
