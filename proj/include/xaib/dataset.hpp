#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xaib/compiler.hpp"
#include "xaib/gt.hpp"
#include "xaib/rng.hpp"
#include "xaib/scene.hpp"
#include "xaib/tensor.hpp"

namespace xaib {

inline constexpr int kDefaultPerClass = 16;
inline constexpr double kDistractorProbability = 0.5;
inline constexpr int kRejectionBudget = 10000;

struct RenderedConcept {
    Tensor patch;  // (6, 6, 3)
    CellPlacement placement;
};

// A uniformly sampled satisfying assignment of the concept, rendered.
RenderedConcept render_concept(int concept_id, std::uint64_t variant_seed,
                               const Definitions& defs = builtin_definitions(),
                               const std::vector<ConceptPartSpec>& parts = default_concept_parts());

struct Example {
    std::string id;
    int model_id = 0;
    int class_label = 0;
    Tensor image;  // (36, 36, 3)
    int r0 = 0, r1 = 0;
    GroundTruth gt;
    std::uint64_t seed = 0;
    Scene scene;
};

// Classes evaluated for a model: classes 3 and 4 are dropped for concepts containing an OR.
std::vector<int> classes_for_model(int model_id, const Definitions& defs = builtin_definitions());

// Grid cells that must hold the model's concept for the class; class 3 picks one of two cells.
std::vector<int> required_cells(int class_label, Rng& rng);

// Class verdicts of the formula oracle for a scene.
std::vector<bool> oracle_classes(const Scene& scene, int model_id, const Definitions& defs);

struct ExampleSlot {
    int class_label = 0;
    int k = 0;  // index within the class
};
std::vector<ExampleSlot> example_slots(int model_id, int per_class, const Definitions& defs = builtin_definitions());

// Example k of a class; depends only on (model, class, k, seed).
Example build_example(const CompiledModel& model, int class_label, int k, std::uint64_t seed);

std::vector<Example> build_test_set(const CompiledModel& model, int per_class = kDefaultPerClass,
                                    std::uint64_t seed = 0);

// Corpus on disk: manifest.json plus <id>_input.t3, <id>_gt3d.t3, <id>_gt2d.t3.
struct CorpusExample {
    std::string id;
    int model_id = 0;
    int class_label = 0;
    int r0 = 0, r1 = 0;
    std::uint64_t seed = 0;
    Tensor image;
    Tensor gt3d;
    Tensor gt2d;
};

struct Corpus {
    int model_id = 0;
    std::uint64_t seed = 0;
    int per_class = kDefaultPerClass;
    std::string parts_version;
    std::vector<CorpusExample> examples;
};

Corpus to_corpus(const std::vector<Example>& examples, int model_id, std::uint64_t seed, int per_class);
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus read_corpus(const std::filesystem::path& dir);

}  // namespace xaib
