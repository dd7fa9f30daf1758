#include "xaib/compiler.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include "json.hpp"

#include "xaib/scene.hpp"

namespace xaib {

using nlohmann::json;

std::string to_string(TermOp op) {
    switch (op) {
        case TermOp::Unused: return "unused";
        case TermOp::Detector: return "detector";
        case TermOp::And: return "and";
        case TermOp::Or: return "or";
        case TermOp::Not: return "not";
        case TermOp::NotNot: return "notnot";
        case TermOp::Pass: return "pass";
        case TermOp::ConstTrue: return "true";
    }
    return "?";
}

TermOp term_op_from_string(const std::string& s) {
    for (TermOp op : {TermOp::Unused, TermOp::Detector, TermOp::And, TermOp::Or, TermOp::Not, TermOp::NotNot,
                      TermOp::Pass, TermOp::ConstTrue}) {
        if (to_string(op) == s) return op;
    }
    throw std::invalid_argument("unknown term op '" + s + "'");
}

Network CompiledModel::conv_submodel() const {
    std::vector<Layer> convs(network.layers().begin() + layer::kConv0, network.layers().begin() + layer::kConv3 + 1);
    return Network(Shape{6, 6, 3}, std::move(convs));
}

namespace {

using AtomInput = std::function<TermInput(const Atom&)>;

void add_weight(Layer& l, const TermInput& in, int out, double w) {
    const auto o = static_cast<std::size_t>(out);
    const auto u = static_cast<std::size_t>(in.unit);
    if (l.kind == LayerKind::Conv2D) {
        const auto kp = static_cast<std::size_t>(in.kpos);
        l.conv_weight(kp / l.kw, kp % l.kw, u, o) += w;
    } else {
        l.dense_weight(u, o) += w;
    }
}

void connect(Layer& l, TermNode& node, int out, const TermInput& in, double w) {
    add_weight(l, in, out, w);
    node.inputs.push_back(in);
}

// Distinct non-constant pair terms in order of first use.
std::vector<PairTerm> distinct_terms(const std::array<Formula, 5>& defs) {
    std::vector<PairTerm> terms;
    for (const auto& f : defs) {
        for (const PairTerm* t : {&f.a, &f.b}) {
            if (t->is_constant()) continue;
            bool seen = false;
            for (const auto& u : terms) seen = seen || u == *t;
            if (!seen) terms.push_back(*t);
        }
    }
    return terms;
}

int term_index(const std::vector<PairTerm>& terms, const PairTerm& t) {
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (terms[i] == t) return static_cast<int>(i);
    }
    return -1;
}

std::string label(const PairTerm& t) { return "(" + print(t.lhs) + (t.op == Binary::And ? " & " : " | ") + print(t.rhs) + ")"; }

void build_pair_layer(Layer& l, std::vector<TermNode>& nodes, const std::vector<PairTerm>& terms,
                      const AtomInput& input_of) {
    if (terms.size() > l.n_out) {
        throw CompileError(l.name + ": " + std::to_string(terms.size()) + " distinct pair terms exceed " +
                           std::to_string(l.n_out) + " available units");
    }
    nodes.assign(l.n_out, TermNode{TermOp::Unused, {}, "unused"});
    for (std::size_t k = 0; k < terms.size(); ++k) {
        const PairTerm& t = terms[k];
        const int o = static_cast<int>(k);
        TermNode& node = nodes[k];
        node.label = label(t);
        if (t.lhs.is_top() || t.rhs.is_top()) {
            if (t.op != Binary::And) throw CompileError(l.name + ": Top may only be joined with '&' in " + node.label);
            node.op = TermOp::Pass;
            connect(l, node, o, input_of(t.lhs.is_top() ? t.rhs : t.lhs), 1.0);
            l.bias[k] = 0.0;
            continue;
        }
        node.op = t.op == Binary::And ? TermOp::And : TermOp::Or;
        connect(l, node, o, input_of(t.lhs), 1.0);
        connect(l, node, o, input_of(t.rhs), 1.0);
        l.bias[k] = t.op == Binary::And ? -1.0 : 0.0;
    }
}

// Units 2k / 2k+1 hold !!(term k) / !(term k).
void build_unary_layer(Layer& l, std::vector<TermNode>& nodes, const std::vector<PairTerm>& terms) {
    nodes.assign(l.n_out, TermNode{TermOp::Unused, {}, "unused"});
    if (2 * terms.size() > l.n_out) throw CompileError(l.name + ": not enough units for unary operators");
    for (std::size_t k = 0; k < terms.size(); ++k) {
        const TermInput in{0, static_cast<int>(k)};
        auto& nn = nodes[2 * k];
        nn.op = TermOp::NotNot;
        nn.label = "!!" + label(terms[k]);
        connect(l, nn, static_cast<int>(2 * k), in, 1.0);
        l.bias[2 * k] = 0.0;
        auto& n = nodes[2 * k + 1];
        n.op = TermOp::Not;
        n.label = "!" + label(terms[k]);
        connect(l, n, static_cast<int>(2 * k + 1), in, -1.0);
        l.bias[2 * k + 1] = 1.0;
    }
}

struct HalfRef {
    enum class Kind { Unit, True, False } kind = Kind::Unit;
    int unit = 0;
};

HalfRef half_ref(Unary u, const PairTerm& t, const std::vector<PairTerm>& terms) {
    if (t.is_constant()) {
        // (T & T) and (T | T) are both constant true.
        return {u == Unary::NotNot ? HalfRef::Kind::True : HalfRef::Kind::False, 0};
    }
    const int k = term_index(terms, t);
    return {HalfRef::Kind::Unit, 2 * k + (u == Unary::Not ? 1 : 0)};
}

void build_join_layer(Layer& l, std::vector<TermNode>& nodes, const std::array<Formula, 5>& defs,
                      const std::vector<PairTerm>& terms, const std::string& what) {
    nodes.assign(l.n_out, TermNode{TermOp::Unused, {}, "unused"});
    for (std::size_t j = 0; j < defs.size(); ++j) {
        const Formula& f = defs[j];
        TermNode& node = nodes[j];
        const int o = static_cast<int>(j);
        node.label = what + " " + std::to_string(j);
        HalfRef a = half_ref(f.c, f.a, terms);
        HalfRef b = half_ref(f.d, f.b, terms);
        if (a.kind != HalfRef::Kind::Unit) std::swap(a, b);
        const bool is_and = f.e == Binary::And;
        if (a.kind == HalfRef::Kind::Unit && b.kind == HalfRef::Kind::Unit) {
            node.op = is_and ? TermOp::And : TermOp::Or;
            connect(l, node, o, {0, a.unit}, 1.0);
            connect(l, node, o, {0, b.unit}, 1.0);
            l.bias[j] = is_and ? -1.0 : 0.0;
        } else if (a.kind == HalfRef::Kind::Unit) {
            // A constant partner either passes the other half through or fixes the result.
            const bool partner = b.kind == HalfRef::Kind::True;
            if (partner == is_and) {
                node.op = TermOp::Pass;
                connect(l, node, o, {0, a.unit}, 1.0);
                l.bias[j] = 0.0;
            } else if (partner) {
                node.op = TermOp::ConstTrue;
                l.bias[j] = 1.0;
            } else {
                node.label += " (always false)";
            }
        } else {
            const bool va = a.kind == HalfRef::Kind::True, vb = b.kind == HalfRef::Kind::True;
            if (is_and ? (va && vb) : (va || vb)) {
                node.op = TermOp::ConstTrue;
                l.bias[j] = 1.0;
            } else {
                node.label += " (always false)";
            }
        }
    }
}

void check_concepts(std::span<const ConceptPartSpec> parts, const std::array<Formula, 5>& concepts) {
    for (std::size_t j = 0; j < concepts.size(); ++j) {
        for (const Atom& a : atoms(concepts[j])) {
            if (a.kind != Atom::Kind::ConceptPart) {
                throw CompileError("concept " + std::to_string(j) + " references non-part atom " + print(a));
            }
            if (static_cast<std::size_t>(a.id) >= parts.size()) {
                throw CompileError("concept " + std::to_string(j) + " references undeclared part " + print(a));
            }
        }
    }
}

}  // namespace

SubModel compile_conv_submodel(std::span<const ConceptPartSpec> parts, const std::array<Formula, 5>& concepts) {
    check_concepts(parts, concepts);
    const std::size_t n_parts = parts.size();
    SubModel sm;
    sm.terms.resize(4);

    Layer c0 = Layer::conv2d("Conv2D_0", 3, 3, 3, 3, n_parts * 3);
    sm.terms[0].resize(c0.n_out);
    for (std::size_t id = 0; id < n_parts; ++id) {
        for (std::size_t ch = 0; ch < 3; ++ch) {
            const std::size_t o = id * 3 + ch;
            for (std::size_t ky = 0; ky < 3; ++ky) {
                for (std::size_t kx = 0; kx < 3; ++kx) c0.conv_weight(ky, kx, ch, o) = parts[id].weights[ky * 3 + kx];
            }
            c0.bias[o] = parts[id].bias;
            sm.terms[0][o] = TermNode{TermOp::Detector, {}, "cp" + std::to_string(id) + "@ch" + std::to_string(ch)};
        }
    }

    const auto terms = distinct_terms(concepts);
    Layer c1 = Layer::conv2d("Conv2D_1", 2, 2, 2, c0.n_out, 8);
    build_pair_layer(c1, sm.terms[1], terms,
                     [](const Atom& a) { return TermInput{a.pos, a.id * 3 + a.ch}; });
    Layer c2 = Layer::conv2d("Conv2D_2", 1, 1, 1, c1.n_out, 16);
    build_unary_layer(c2, sm.terms[2], terms);
    Layer c3 = Layer::conv2d("Conv2D_3", 1, 1, 1, c2.n_out, kNumConcepts);
    build_join_layer(c3, sm.terms[3], concepts, terms, "concept");

    sm.layers = {std::move(c0), std::move(c1), std::move(c2), std::move(c3)};
    return sm;
}

SubModel compile_dense_submodel(const std::array<Formula, 5>& classes) {
    for (std::size_t j = 0; j < classes.size(); ++j) {
        for (const Atom& a : atoms(classes[j])) {
            if (a.kind != Atom::Kind::Concept || a.id == Atom::kIdPlaceholder) {
                throw CompileError("class " + std::to_string(j) + " must reference concrete concepts, got " + print(a));
            }
        }
    }
    SubModel sm;
    sm.terms.resize(3);
    const auto terms = distinct_terms(classes);
    const std::size_t n_flat = static_cast<std::size_t>(kGridCells * kNumConcepts);
    Layer d0 = Layer::dense("Dense_0", n_flat, 30);
    build_pair_layer(d0, sm.terms[0], terms, [](const Atom& a) {
        return TermInput{0, static_cast<int>(flat_concept_index(a.id, a.pos))};
    });
    Layer d1 = Layer::dense("Dense_1", d0.n_out, 60);
    build_unary_layer(d1, sm.terms[1], terms);
    Layer d2 = Layer::dense("Dense_2", d1.n_out, kNumClasses);
    build_join_layer(d2, sm.terms[2], classes, terms, "class");
    sm.layers = {std::move(d0), std::move(d1), std::move(d2)};
    return sm;
}

CompiledModel compile_model(int concept_id, const Definitions& defs, const std::vector<ConceptPartSpec>& parts) {
    if (concept_id < 0 || concept_id >= kNumConcepts) {
        throw CompileError("concept id " + std::to_string(concept_id) + " outside [0, 4]");
    }
    const auto problems = check_concept_parts(parts);
    if (!problems.empty()) throw CompileError("invalid concept parts: " + problems.front());

    SubModel conv = compile_conv_submodel(parts, defs.concepts);
    SubModel dense = compile_dense_submodel(defs.classes_for(concept_id));

    std::vector<Layer> layers;
    layers.push_back(Layer::max_pool("MaxPool2D_0", 2, 2));
    for (auto& l : conv.layers) layers.push_back(std::move(l));
    layers.push_back(Layer::flatten("Flatten_0"));
    for (auto& l : dense.layers) layers.push_back(std::move(l));

    CompiledModel m;
    m.network = Network(Shape{36, 36, 3}, std::move(layers));
    m.concept_id = concept_id;
    m.parts = parts;
    m.definitions = defs;
    m.term_map.resize(layer::kCount);
    for (std::size_t i = 0; i < 4; ++i) m.term_map[layer::kConv0 + i] = std::move(conv.terms[i]);
    for (std::size_t i = 0; i < 3; ++i) m.term_map[layer::kDense0 + i] = std::move(dense.terms[i]);

    const auto report = verify_against_oracle(m, concept_id);
    if (!report.ok()) {
        throw CompileError("model " + std::to_string(concept_id) + " disagrees with the formula oracle: " +
                           report.mismatches.front());
    }
    return m;
}

VerificationReport verify_against_oracle(const CompiledModel& model, int concept_id) {
    VerificationReport rep;
    const auto& concepts = model.definitions.concepts;

    // Every slot can hold nothing or any part some concept expects there.
    std::array<std::vector<int>, 12> options;
    for (auto& o : options) o = {kNoPart};
    for (const auto& f : concepts) {
        for (const Atom& a : atoms(f)) {
            auto& o = options[static_cast<std::size_t>(a.pos * 3 + a.ch)];
            if (std::find(o.begin(), o.end(), a.id) == o.end()) o.push_back(a.id);
        }
    }
    const Network conv = model.conv_submodel();
    std::array<std::size_t, 12> digit{};
    while (true) {
        CellPlacement cell;
        for (std::size_t s = 0; s < 12; ++s) cell.slots[s] = options[s][digit[s]];
        const auto out = predict(conv, render_cell(cell, model.parts));
        for (std::size_t j = 0; j < concepts.size(); ++j) {
            const double want = evaluate(concepts[j], part_assignment(concepts[j], cell)) ? 1.0 : 0.0;
            if (out[j] != want && rep.mismatches.size() < 20) {
                std::string where;
                for (std::size_t s = 0; s < 12; ++s) {
                    if (cell.slots[s] != kNoPart) {
                        where += " cp" + std::to_string(cell.slots[s]) + "@" + std::to_string(s / 3) + "/" +
                                 std::to_string(s % 3);
                    }
                }
                rep.mismatches.push_back("cell [" + where + " ]: concept " + std::to_string(j) + " map " +
                                         std::to_string(out[j]) + ", oracle " + std::to_string(want));
            }
        }
        ++rep.cell_patterns;
        std::size_t s = 0;
        while (s < 12 && ++digit[s] == options[s].size()) digit[s++] = 0;
        if (s == 12) break;
    }

    const auto classes = model.definitions.classes_for(concept_id);
    const Formula& own = concepts[static_cast<std::size_t>(concept_id)];
    const CellPlacement canonical = placement_for(own, canonical_assignment(own));
    const CellPlacement alternate = placement_for(own, satisfying_assignments(own).back());
    for (unsigned mask = 0; mask < (1u << kGridCells); ++mask) {
        Assignment asg;
        for (int pos = 0; pos < kGridCells; ++pos) asg[Atom::concept_at(concept_id, pos)] = (mask >> pos) & 1u;
        std::vector<double> want(kNumClasses);
        int n_true = 0, truth = -1;
        for (int k = 0; k < kNumClasses; ++k) {
            if (evaluate(classes[static_cast<std::size_t>(k)], asg)) {
                want[static_cast<std::size_t>(k)] = 1.0;
                ++n_true;
                truth = k;
            }
        }
        ++rep.grid_patterns;
        if (n_true == 1) ++rep.single_class_patterns;

        for (int variant = 0; variant < 2; ++variant) {
            Scene scene;
            for (int k = 0; k < kGridCells; ++k) {
                const auto ku = static_cast<std::size_t>(k);
                if ((mask >> k) & 1u) {
                    scene.content[ku] = concept_id;
                    scene.cells[ku] = variant == 0 ? canonical : alternate;
                } else if (variant == 1) {
                    const int other = (concept_id + 1 + k % 4) % kNumConcepts;
                    const Formula& f = concepts[static_cast<std::size_t>(other)];
                    scene.content[ku] = other;
                    scene.cells[ku] = placement_for(f, canonical_assignment(f));
                }
            }
            const Tensor img = upscale(render_scene(scene, model.parts), variant, variant);
            const auto out = predict(model.network, img);
            ++rep.images;
            bool bad = out != want;
            if (!bad && n_true == 1) {
                bad = std::max_element(out.begin(), out.end()) - out.begin() != truth;
            }
            if (bad && rep.mismatches.size() < 20) {
                rep.mismatches.push_back("grid mask " + std::to_string(mask) + " variant " + std::to_string(variant) +
                                         ": network output disagrees with class formulas");
            }
        }
    }
    return rep;
}

namespace {

json layer_json(const Layer& l, const Shape& out) {
    json j;
    j["name"] = l.name;
    j["kind"] = to_string(l.kind);
    j["kernel"] = {l.kh, l.kw};
    j["stride"] = {l.sh, l.sw};
    j["activation"] = l.activation == Activation::ClippedReLU ? "clipped_relu" : "none";
    j["output_shape"] = {out.h, out.w, out.c};
    if (l.kind == LayerKind::Conv2D || l.kind == LayerKind::Dense) {
        j["units_in"] = l.n_in;
        j["units_out"] = l.n_out;
        j["weights"] = l.name + "_weights.t3";
        j["bias"] = l.name + "_bias.t3";
    }
    return j;
}

json part_json(const ConceptPartSpec& p) {
    return {{"id", p.id},           {"pattern", p.pattern},     {"weights", p.weights},
            {"bias", p.bias},       {"noise_row", p.noise_row}, {"noise_col", p.noise_col}};
}

}  // namespace

std::string concept_parts_json(std::span<const ConceptPartSpec> parts, const std::string& version) {
    json j = {{"format", "xaib-concept-parts"}, {"version", version}, {"parts", json::array()}};
    for (const auto& p : parts) j["parts"].push_back(part_json(p));
    return j.dump(2) + "\n";
}

void save_model(const CompiledModel& model, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    json j;
    j["format"] = "xaib-model";
    j["version"] = 1;
    j["concept_id"] = model.concept_id;
    j["pattern_set"] = model.parts_version;
    const Shape in = model.network.input_shape();
    j["input_shape"] = {in.h, in.w, in.c};
    j["definitions"] = print_definitions(model.definitions);
    j["concept_parts"] = json::array();
    for (const auto& p : model.parts) j["concept_parts"].push_back(part_json(p));
    j["layers"] = json::array();
    for (std::size_t i = 0; i < model.network.layers().size(); ++i) {
        const Layer& l = model.network.layer(i);
        j["layers"].push_back(layer_json(l, model.network.shape(i)));
        if (l.kind == LayerKind::Conv2D || l.kind == LayerKind::Dense) {
            write_t3(dir / (l.name + "_weights.t3"), Tensor(Shape{l.kh * l.kw, l.n_in, l.n_out}, l.weights));
            write_t3(dir / (l.name + "_bias.t3"), Tensor(Shape{1, 1, l.n_out}, l.bias));
        }
        json terms = json::array();
        for (const auto& node : model.term_map[i]) {
            json inputs = json::array();
            for (const auto& t : node.inputs) inputs.push_back({t.kpos, t.unit});
            terms.push_back({{"op", to_string(node.op)}, {"label", node.label}, {"inputs", inputs}});
        }
        j["term_map"][l.name] = terms;
    }
    std::ofstream(dir / "model.json") << j.dump(2) << "\n";
}

CompiledModel load_model(const std::filesystem::path& dir) {
    std::ifstream f(dir / "model.json");
    if (!f) throw std::runtime_error("cannot open " + (dir / "model.json").string());
    const json j = json::parse(f);
    if (j.value("format", "") != "xaib-model") throw std::runtime_error("not a model manifest");

    CompiledModel m;
    m.concept_id = j.at("concept_id").get<int>();
    m.parts_version = j.at("pattern_set").get<std::string>();
    m.definitions = parse_definitions(j.at("definitions").get<std::string>());
    for (const auto& p : j.at("concept_parts")) {
        ConceptPartSpec s;
        s.id = p.at("id");
        s.pattern = p.at("pattern").get<std::array<double, 9>>();
        s.weights = p.at("weights").get<std::array<double, 9>>();
        s.bias = p.at("bias");
        s.noise_row = p.at("noise_row");
        s.noise_col = p.at("noise_col");
        m.parts.push_back(s);
    }
    std::vector<Layer> layers;
    for (const auto& lj : j.at("layers")) {
        const std::string kind = lj.at("kind");
        const std::string name = lj.at("name");
        const auto kernel = lj.at("kernel").get<std::array<std::size_t, 2>>();
        const auto stride = lj.at("stride").get<std::array<std::size_t, 2>>();
        Layer l;
        if (kind == "MaxPool") {
            l = Layer::max_pool(name, kernel[0], stride[0]);
        } else if (kind == "Flatten") {
            l = Layer::flatten(name);
        } else if (kind == "Conv2D" || kind == "Dense") {
            const std::size_t n_in = lj.at("units_in"), n_out = lj.at("units_out");
            l = kind == "Conv2D" ? Layer::conv2d(name, kernel[0], kernel[1], stride[0], n_in, n_out)
                                 : Layer::dense(name, n_in, n_out);
            const Tensor w = read_t3(dir / lj.at("weights").get<std::string>());
            const Tensor b = read_t3(dir / lj.at("bias").get<std::string>());
            if (w.size() != l.weights.size() || b.size() != l.bias.size()) {
                throw std::runtime_error("layer '" + name + "': weight file size mismatch");
            }
            l.weights.assign(w.values().begin(), w.values().end());
            l.bias.assign(b.values().begin(), b.values().end());
        } else {
            throw std::runtime_error("unknown layer kind '" + kind + "'");
        }
        layers.push_back(std::move(l));
    }
    const auto in = j.at("input_shape").get<std::array<std::size_t, 3>>();
    m.network = Network(Shape{in[0], in[1], in[2]}, std::move(layers));
    m.term_map.resize(m.network.layers().size());
    for (std::size_t i = 0; i < m.network.layers().size(); ++i) {
        for (const auto& t : j.at("term_map").at(m.network.layer(i).name)) {
            TermNode node;
            node.op = term_op_from_string(t.at("op"));
            node.label = t.at("label");
            for (const auto& in_j : t.at("inputs")) node.inputs.push_back({in_j.at(0), in_j.at(1)});
            m.term_map[i].push_back(std::move(node));
        }
    }
    return m;
}

}  // namespace xaib
