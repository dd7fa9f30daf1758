#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "xaib/tensor.hpp"

namespace xaib {

struct StoredExplanation {
    std::string example_id;
    int model_id = 0;
    int class_label = 0;
    Tensor values;
    double elapsed_ms = 0.0;
};

// One method's explanations for a corpus. Directories written by other
// tools are accepted as long as they follow the same manifest layout.
struct ExplanationSet {
    std::string method;
    std::string dims;  // "2D" or "3D"
    std::vector<StoredExplanation> items;
};

// Manifest entries carry the role "explanation". Timings go to timing.json
// so that manifest.json depends only on the inputs.
void write_explanations(const ExplanationSet& set, const std::filesystem::path& dir);
// Rejects tensors whose channel count disagrees with the declared dims.
ExplanationSet read_explanations(const std::filesystem::path& dir);

}  // namespace xaib
