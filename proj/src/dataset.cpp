#include "xaib/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include "json.hpp"

namespace xaib {

using nlohmann::json;

namespace {

bool contains_or(const Formula& f) {
    return f.a.op == Binary::Or || f.b.op == Binary::Or || f.e == Binary::Or;
}

CellPlacement sample_placement(const Formula& definition, Rng& rng) {
    const auto options = satisfying_assignments(definition);
    if (options.empty()) throw std::invalid_argument("concept formula is unsatisfiable: " + print(definition));
    return placement_for(definition, options[rng.below(options.size())]);
}

std::string example_id(int model_id, int class_label, int k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "m%d_c%d_%02d", model_id, class_label, k);
    return buf;
}

}  // namespace

RenderedConcept render_concept(int concept_id, std::uint64_t variant_seed, const Definitions& defs,
                               const std::vector<ConceptPartSpec>& parts) {
    if (concept_id < 0 || concept_id >= kNumConcepts) throw std::out_of_range("concept id out of range");
    Rng rng(variant_seed);
    RenderedConcept out;
    out.placement = sample_placement(defs.concepts[static_cast<std::size_t>(concept_id)], rng);
    out.patch = render_cell(out.placement, parts);
    return out;
}

std::vector<int> classes_for_model(int model_id, const Definitions& defs) {
    if (model_id < 0 || model_id >= kNumConcepts) throw std::out_of_range("model id out of range");
    std::vector<int> out{0, 1, 2};
    if (!contains_or(defs.concepts[static_cast<std::size_t>(model_id)])) {
        out.push_back(3);
        out.push_back(4);
    }
    return out;
}

std::vector<int> required_cells(int class_label, Rng& rng) {
    switch (class_label) {
        case 0: return {0};
        case 1: return {3};
        case 2: return {1, 2};
        case 3: return {rng.bernoulli(0.5) ? 1 : 2};
        case 4: return {};
        default: throw std::out_of_range("class label out of range");
    }
}

std::vector<bool> oracle_classes(const Scene& scene, int model_id, const Definitions& defs) {
    Assignment present;
    for (int pos = 0; pos < kGridCells; ++pos) {
        int found = 0;
        for (int id = 0; id < kNumConcepts; ++id) {
            const Formula& f = defs.concepts[static_cast<std::size_t>(id)];
            const bool on = evaluate(f, part_assignment(f, scene.cells[static_cast<std::size_t>(pos)]));
            present[Atom::concept_at(id, pos)] = on;
            found += on ? 1 : 0;
        }
        if (found > 1) throw std::logic_error("cell " + std::to_string(pos) + " satisfies more than one concept");
    }
    std::vector<bool> out;
    for (const Formula& f : defs.classes_for(model_id)) out.push_back(evaluate(f, present));
    return out;
}

std::vector<ExampleSlot> example_slots(int model_id, int per_class, const Definitions& defs) {
    if (per_class < 1) throw std::invalid_argument("per_class must be at least 1");
    std::vector<ExampleSlot> out;
    for (int label : classes_for_model(model_id, defs)) {
        for (int k = 0; k < per_class; ++k) out.push_back({label, k});
    }
    return out;
}

Example build_example(const CompiledModel& model, int class_label, int k, std::uint64_t seed) {
    const int model_id = model.concept_id;
    const Definitions& defs = model.definitions;
    const std::uint64_t ex_seed = derive_seed(seed, static_cast<std::uint64_t>(model_id * kNumClasses + class_label),
                                              static_cast<std::uint64_t>(k));
    Rng rng(ex_seed);
    Scene scene;
    bool accepted = false;
    for (int attempt = 0; attempt < kRejectionBudget && !accepted; ++attempt) {
        scene = Scene{};
        for (int cell : required_cells(class_label, rng)) scene.content[static_cast<std::size_t>(cell)] = model_id;
        for (int cell = 0; cell < kGridCells; ++cell) {
            auto& content = scene.content[static_cast<std::size_t>(cell)];
            if (content == kNoConcept && rng.bernoulli(kDistractorProbability)) {
                content = static_cast<int>(rng.below(kNumConcepts));
            }
            if (content != kNoConcept) {
                scene.cells[static_cast<std::size_t>(cell)] =
                    sample_placement(defs.concepts[static_cast<std::size_t>(content)], rng);
            }
        }
        const auto verdict = oracle_classes(scene, model_id, defs);
        int members = 0;
        for (bool v : verdict) members += v ? 1 : 0;
        accepted = members == 1 && verdict[static_cast<std::size_t>(class_label)];
    }
    if (!accepted) {
        throw std::runtime_error("rejection budget exhausted for model " + std::to_string(model_id) + " class " +
                                 std::to_string(class_label));
    }
    Example ex;
    ex.id = example_id(model_id, class_label, k);
    ex.model_id = model_id;
    ex.class_label = class_label;
    ex.seed = ex_seed;
    ex.r0 = static_cast<int>(rng.below(2));
    ex.r1 = static_cast<int>(rng.below(2));
    ex.scene = scene;
    ex.image = upscale(render_scene(scene, model.parts), ex.r0, ex.r1);
    ex.gt = ground_truth(model, ex.image, ex.r0, ex.r1, class_label);
    return ex;
}

std::vector<Example> build_test_set(const CompiledModel& model, int per_class, std::uint64_t seed) {
    std::vector<Example> out;
    for (const auto& slot : example_slots(model.concept_id, per_class, model.definitions)) {
        out.push_back(build_example(model, slot.class_label, slot.k, seed));
    }
    return out;
}

Corpus to_corpus(const std::vector<Example>& examples, int model_id, std::uint64_t seed, int per_class) {
    Corpus c;
    c.model_id = model_id;
    c.seed = seed;
    c.per_class = per_class;
    c.parts_version = kConceptPartsVersion;
    for (const auto& ex : examples) {
        c.examples.push_back({ex.id, ex.model_id, ex.class_label, ex.r0, ex.r1, ex.seed, ex.image, ex.gt.gt3d, ex.gt.gt2d});
    }
    return c;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    json examples = json::array();
    json files = json::array();
    std::map<std::string, int> counts;
    for (const auto& ex : corpus.examples) {
        json f;
        for (const auto& [role, t] : {std::pair<const char*, const Tensor*>{"input", &ex.image},
                                      {"gt3d", &ex.gt3d},
                                      {"gt2d", &ex.gt2d}}) {
            const std::string name = ex.id + "_" + role + ".t3";
            write_t3(dir / name, *t);
            f[role] = name;
            files.push_back({{"path", name},
                             {"role", role},
                             {"example_id", ex.id},
                             {"class_label", ex.class_label},
                             {"model_id", ex.model_id}});
        }
        examples.push_back({{"id", ex.id},
                            {"model_id", ex.model_id},
                            {"class_label", ex.class_label},
                            {"offsets", {ex.r0, ex.r1}},
                            {"seed", ex.seed},
                            {"files", f}});
        ++counts[std::to_string(ex.class_label)];
    }
    json m = {{"format", "xaib-corpus"},
              {"version", 1},
              {"model_id", corpus.model_id},
              {"seed", corpus.seed},
              {"per_class", corpus.per_class},
              {"pattern_set", corpus.parts_version},
              {"counts", counts},
              {"examples", examples},
              {"files", files}};
    std::ofstream os(dir / "manifest.json");
    if (!os) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
    os << m.dump(2) << '\n';
}

Corpus read_corpus(const std::filesystem::path& dir) {
    std::ifstream is(dir / "manifest.json");
    if (!is) throw std::runtime_error("missing corpus manifest in " + dir.string());
    json m;
    try {
        m = json::parse(is);
    } catch (const json::exception& e) {
        throw std::runtime_error("corpus manifest is not valid JSON: " + std::string(e.what()));
    }
    if (m.value("format", "") != "xaib-corpus") throw std::runtime_error("not a corpus manifest: " + dir.string());
    Corpus c;
    try {
        c.model_id = m.at("model_id").get<int>();
        c.seed = m.at("seed").get<std::uint64_t>();
        c.per_class = m.at("per_class").get<int>();
        c.parts_version = m.at("pattern_set").get<std::string>();
        for (const auto& e : m.at("examples")) {
            CorpusExample ex;
            ex.id = e.at("id").get<std::string>();
            ex.model_id = e.at("model_id").get<int>();
            ex.class_label = e.at("class_label").get<int>();
            ex.r0 = e.at("offsets").at(0).get<int>();
            ex.r1 = e.at("offsets").at(1).get<int>();
            ex.seed = e.at("seed").get<std::uint64_t>();
            const auto& f = e.at("files");
            ex.image = read_t3(dir / f.at("input").get<std::string>());
            ex.gt3d = read_t3(dir / f.at("gt3d").get<std::string>());
            ex.gt2d = read_t3(dir / f.at("gt2d").get<std::string>());
            c.examples.push_back(std::move(ex));
        }
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed corpus manifest: " + std::string(e.what()));
    }
    return c;
}

}  // namespace xaib
