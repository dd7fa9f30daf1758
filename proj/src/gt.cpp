#include "xaib/gt.hpp"

#include <cmath>
#include <stdexcept>

#include "xaib/scene.hpp"

namespace xaib {

namespace {

// Distributes the influence of one node over its inputs; `input_active`
// reports whether the k-th input is active in the forward pass.
template <typename Active, typename Emit>
void distribute(const TermNode& node, bool node_active, const Influence& inf, Active input_active, Emit emit) {
    const auto& ins = node.inputs;
    switch (node.op) {
        case TermOp::Pass:
        case TermOp::NotNot:
            for (std::size_t k = 0; k < ins.size(); ++k) emit(k, inf);
            break;
        case TermOp::Not:
            for (std::size_t k = 0; k < ins.size(); ++k) emit(k, inf.flipped());
            break;
        case TermOp::And:
        case TermOp::Or: {
            // A true AND and a false OR need every input; a true OR and a
            // false AND are explained by the inputs that decided them.
            const bool needs_all = (node.op == TermOp::And) == node_active;
            if (needs_all) {
                for (std::size_t k = 0; k < ins.size(); ++k) emit(k, inf);
                break;
            }
            std::vector<std::size_t> deciding;
            for (std::size_t k = 0; k < ins.size(); ++k) {
                if (input_active(k) == node_active) deciding.push_back(k);
            }
            for (std::size_t k : deciding) emit(k, inf.scaled(1.0 / static_cast<double>(deciding.size())));
            break;
        }
        case TermOp::Unused:
        case TermOp::Detector:
        case TermOp::ConstTrue: break;
    }
}

}  // namespace

InfluenceMap backtrack_influence(const CompiledModel& model, const ForwardTrace& trace, int true_class) {
    const Network& net = model.network;
    if (trace.size() != net.layers().size()) throw std::invalid_argument("trace does not match model");
    const Tensor& out = trace.output();
    if (true_class < 0 || static_cast<std::size_t>(true_class) >= out.size()) {
        throw std::out_of_range("true class out of range");
    }
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double want = static_cast<int>(k) == true_class ? 1.0 : 0.0;
        if (out[k] != want) {
            throw std::invalid_argument("ground truth requires a one-hot output at class " +
                                        std::to_string(true_class));
        }
    }

    InfluenceMap m;
    m.true_class = true_class;
    m.nodes.resize(net.layers().size());
    for (std::size_t l = 0; l < net.layers().size(); ++l) m.nodes[l].assign(trace.post[l].size(), Influence{});
    m.nodes[layer::kDense2][static_cast<std::size_t>(true_class)] = {1.0, 0.0};

    // Dense sub-model.
    for (std::size_t l = layer::kDense2; l >= layer::kDense0; --l) {
        const auto& terms = model.term_map[l];
        const Tensor& post = trace.post[l];
        const Tensor& prev = trace.post[l - 1];
        auto& prev_inf = m.nodes[l - 1];
        for (std::size_t u = 0; u < terms.size(); ++u) {
            const Influence inf = m.nodes[l][u];
            if (!inf.any()) continue;
            const auto& ins = terms[u].inputs;
            distribute(
                terms[u], post[u] > 0.0, inf, [&](std::size_t k) { return prev[static_cast<std::size_t>(ins[k].unit)] > 0.0; },
                [&](std::size_t k, const Influence& v) { prev_inf[static_cast<std::size_t>(ins[k].unit)] += v; });
        }
    }

    // Flattened concept map back to concept instances.
    const Tensor& concept_map = trace.post[layer::kConv3];
    const auto& flat_inf = m.nodes[layer::kFlatten0];
    auto& conv3_inf = m.nodes[layer::kConv3];
    const auto& concepts = model.definitions.concepts;
    for (int pos = 0; pos < kGridCells; ++pos) {
        for (int id = 0; id < kNumConcepts; ++id) {
            const std::size_t flat = flat_concept_index(id, pos);
            const Influence inf = flat_inf[flat];
            if (!inf.any()) continue;
            m.concept_level[static_cast<std::size_t>(id)][static_cast<std::size_t>(pos)] = inf;
            if (concept_map[flat] > 0.0) {
                conv3_inf[flat] += inf;
                continue;
            }
            // Absent concept: its canonical parts carry the full influence.
            const Formula& f = concepts[static_cast<std::size_t>(id)];
            const CellPlacement cell = placement_for(f, canonical_assignment(f));
            const Tensor& det = trace.post[layer::kConv0];
            for (int q = 0; q < 4; ++q) {
                for (int ch = 0; ch < 3; ++ch) {
                    const int part = cell.at(q, ch);
                    if (part == kNoPart) continue;
                    const std::size_t y = static_cast<std::size_t>(2 * (pos / 3) + q / 2);
                    const std::size_t x = static_cast<std::size_t>(2 * (pos % 3) + q % 2);
                    m.nodes[layer::kConv0][det.index(y, x, static_cast<std::size_t>(part * 3 + ch))] += inf;
                }
            }
        }
    }

    // Convolutional sub-model, one concept cell at a time.
    for (std::size_t l = layer::kConv3; l > layer::kConv0; --l) {
        const Layer& L = net.layer(l);
        const auto& terms = model.term_map[l];
        const Tensor& post = trace.post[l];
        const Tensor& prev = trace.post[l - 1];
        auto& prev_inf = m.nodes[l - 1];
        for (std::size_t y = 0; y < post.h(); ++y) {
            for (std::size_t x = 0; x < post.w(); ++x) {
                for (std::size_t u = 0; u < terms.size(); ++u) {
                    const Influence inf = m.nodes[l][post.index(y, x, u)];
                    if (!inf.any()) continue;
                    const auto& ins = terms[u].inputs;
                    auto where = [&](std::size_t k) {
                        const auto kp = static_cast<std::size_t>(ins[k].kpos);
                        return prev.index(y * L.sh + kp / L.kw, x * L.sw + kp % L.kw,
                                          static_cast<std::size_t>(ins[k].unit));
                    };
                    distribute(
                        terms[u], post[post.index(y, x, u)] > 0.0, inf,
                        [&](std::size_t k) { return prev[where(k)] > 0.0; },
                        [&](std::size_t k, const Influence& v) { prev_inf[where(k)] += v; });
                }
            }
        }
    }
    return m;
}

GroundTruth render_gt(const InfluenceMap& influence, const Tensor& input, std::span<const ConceptPartSpec> parts,
                      int r0, int r1) {
    if ((r0 != 0 && r0 != 1) || (r1 != 0 && r1 != 1)) throw std::invalid_argument("upscale offsets must be 0 or 1");
    if (input.shape() != Shape{36, 36, 3}) throw std::invalid_argument("render_gt expects a 36x36x3 input");
    if (influence.nodes.size() <= layer::kConv0) throw std::invalid_argument("influence map is incomplete");

    auto pixel = [&](std::size_t y, std::size_t x, std::size_t ch) {
        return input.at(2 * y + static_cast<std::size_t>(r0), 2 * x + static_cast<std::size_t>(r1), ch);
    };
    const auto& det = influence.nodes[layer::kConv0];
    const std::size_t n_det = parts.size() * 3;
    Tensor raw(Shape{18, 18, 3});
    for (std::size_t qy = 0; qy < 6; ++qy) {
        for (std::size_t qx = 0; qx < 6; ++qx) {
            for (std::size_t o = 0; o < n_det; ++o) {
                const Influence inf = det[(qy * 6 + qx) * n_det + o];
                if (!inf.any()) continue;
                const auto& w = parts[o / 3].weights;
                const std::size_t ch = o % 3;
                for (std::size_t dy = 0; dy < 3; ++dy) {
                    for (std::size_t dx = 0; dx < 3; ++dx) {
                        const std::size_t y = 3 * qy + dy, x = 3 * qx + dx;
                        const double v = pixel(y, x, ch);
                        const double wt = w[dy * 3 + dx];
                        // Positive contributions scale with the pixel, negative ones with its complement.
                        raw.at(y, x, ch) += inf.positive * wt * v - inf.negative * wt * (1.0 - v);
                    }
                }
            }
        }
    }
    GroundTruth gt;
    gt.gt3d = upscale(normalize(raw), r0, r1);
    gt.gt2d = to_2d(gt.gt3d);
    return gt;
}

GroundTruth ground_truth(const CompiledModel& model, const Tensor& input, int r0, int r1, int true_class) {
    const auto fr = forward(model.network, input);
    return render_gt(backtrack_influence(model, fr.trace, true_class), input, model.parts, r0, r1);
}

Tensor normalize(const Tensor& e) {
    const double scale = std::max(std::abs(e.min()), std::abs(e.max()));
    if (scale == 0.0) return e;
    Tensor out = e;
    for (auto& v : out.values()) v /= scale;
    return out;
}

Tensor to_2d(const Tensor& e3) {
    Tensor out(Shape{e3.h(), e3.w(), 1});
    for (std::size_t y = 0; y < e3.h(); ++y) {
        for (std::size_t x = 0; x < e3.w(); ++x) {
            double best = 0.0;
            for (std::size_t ch = 0; ch < e3.c(); ++ch) {
                const double v = e3.at(y, x, ch);
                if (std::abs(v) > std::abs(best)) best = v;
            }
            out.at(y, x, 0) = best;
        }
    }
    return out;
}

}  // namespace xaib
