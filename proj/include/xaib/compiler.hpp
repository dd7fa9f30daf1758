#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "xaib/concept_parts.hpp"
#include "xaib/formula.hpp"
#include "xaib/nn.hpp"

namespace xaib {

// Layer positions in the compiled architecture.
namespace layer {
inline constexpr std::size_t kMaxPool0 = 0;
inline constexpr std::size_t kConv0 = 1;
inline constexpr std::size_t kConv1 = 2;
inline constexpr std::size_t kConv2 = 3;
inline constexpr std::size_t kConv3 = 4;
inline constexpr std::size_t kFlatten0 = 5;
inline constexpr std::size_t kDense0 = 6;
inline constexpr std::size_t kDense1 = 7;
inline constexpr std::size_t kDense2 = 8;
inline constexpr std::size_t kCount = 9;
}  // namespace layer

inline constexpr int kNumConcepts = 5;
inline constexpr int kNumClasses = 5;
inline constexpr int kGridCells = 9;

// Flattened index of concept `id` at grid position `pos` in the 3x3x5 concept map.
inline std::size_t flat_concept_index(int id, int pos) { return static_cast<std::size_t>(pos * kNumConcepts + id); }

enum class TermOp { Unused, Detector, And, Or, Not, NotNot, Pass, ConstTrue };
std::string to_string(TermOp op);
TermOp term_op_from_string(const std::string& s);

// One input of a term node: kernel position (quadrant for Conv2D_1, else 0)
// and unit index (channel or flat node index) in the previous layer.
struct TermInput {
    int kpos = 0;
    int unit = 0;
    friend bool operator==(const TermInput&, const TermInput&) = default;
};

struct TermNode {
    TermOp op = TermOp::Unused;
    std::vector<TermInput> inputs;
    std::string label;
    friend bool operator==(const TermNode&, const TermNode&) = default;
};

// Per layer index; empty for MaxPool and Flatten.
using TermMap = std::vector<std::vector<TermNode>>;

class CompileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SubModel {
    std::vector<Layer> layers;
    std::vector<std::vector<TermNode>> terms;
};

struct CompiledModel {
    Network network;
    int concept_id = 0;
    TermMap term_map;
    std::vector<ConceptPartSpec> parts;
    Definitions definitions;
    std::string parts_version = kConceptPartsVersion;

    // Conv2D_0..3 as a standalone network over a single 6x6x3 concept cell.
    Network conv_submodel() const;
};

SubModel compile_conv_submodel(std::span<const ConceptPartSpec> parts, const std::array<Formula, 5>& concepts);
SubModel compile_dense_submodel(const std::array<Formula, 5>& classes);

// Full model for one concept id; verified against the formula oracle before
// it is returned (CompileError on any disagreement).
CompiledModel compile_model(int concept_id, const Definitions& defs = builtin_definitions(),
                            const std::vector<ConceptPartSpec>& parts = default_concept_parts());

struct VerificationReport {
    std::size_t cell_patterns = 0;       // concept-cell part placements checked
    std::size_t grid_patterns = 0;       // 3x3 presence patterns checked (per-class outputs)
    std::size_t single_class_patterns = 0;  // of those, patterns in exactly one class (argmax checked)
    std::size_t images = 0;              // rendered images pushed through the full network
    std::vector<std::string> mismatches;

    bool ok() const { return mismatches.empty(); }
};

VerificationReport verify_against_oracle(const CompiledModel& model, int concept_id);

// The pattern set as a JSON document (format "xaib-concept-parts").
std::string concept_parts_json(std::span<const ConceptPartSpec> parts, const std::string& version = kConceptPartsVersion);

void save_model(const CompiledModel& model, const std::filesystem::path& dir);
CompiledModel load_model(const std::filesystem::path& dir);

}  // namespace xaib
