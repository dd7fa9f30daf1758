#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace xaib {

inline constexpr const char* kConceptPartsVersion = "cp-v1";
inline constexpr int kNumConceptParts = 12;

// A 3x3 single-channel pixel pattern and the Conv2D_0 detector that fires on it.
struct ConceptPartSpec {
    int id = 0;
    std::array<double, 9> pattern{};  // row-major, values in {0, 1/2, 1}
    std::array<double, 9> weights{};  // row-major, values in {-1, -1/2, 0, 1, 2}
    double bias = -1.0;
    int noise_row = 0;  // row holding [1/2, 1, 1/2] with weights [1, 0, -1]
    int noise_col = 0;  // column holding [0; 0] with weights [1; -1] on the other two rows

    double response(const std::array<double, 9>& patch) const;
    friend bool operator==(const ConceptPartSpec&, const ConceptPartSpec&) = default;
};

// The frozen pattern set shipped with this version.
const std::vector<ConceptPartSpec>& default_concept_parts();

// Randomized greedy search for a pattern set satisfying every invariant.
// default_concept_parts() is the output of this search for kConceptPartsSearchSeed.
inline constexpr std::uint64_t kConceptPartsSearchSeed = 2023;
std::vector<ConceptPartSpec> search_concept_parts(std::uint64_t seed);

// Human-readable list of invariant violations; empty when the set is valid.
std::vector<std::string> check_concept_parts(std::span<const ConceptPartSpec> parts);

}  // namespace xaib
