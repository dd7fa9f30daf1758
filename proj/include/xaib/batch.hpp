#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xaib/attribution.hpp"
#include "xaib/compiler.hpp"
#include "xaib/dataset.hpp"

namespace xaib {

inline constexpr const char* kWorkersEnv = "XAIB_WORKERS";

// Worker count from XAIB_WORKERS, else the OpenMP default. Throws
// std::invalid_argument when the variable is set but not a positive integer.
int worker_count();

// Same result as build_test_set; examples are generated across `workers` threads.
std::vector<Example> build_test_set_parallel(const CompiledModel& model, int per_class, std::uint64_t seed,
                                             int workers);

struct MethodSpec {
    Method method = Method::Saliency;
    MethodConfig config;
};

struct EvalTask {
    std::span<const CompiledModel> models;  // looked up by concept_id
    std::span<const CorpusExample> examples;
    std::vector<MethodSpec> methods;
    std::vector<std::string> metrics;
    std::uint64_t seed = 0;  // sampled methods draw from derive_seed(seed, method, example)
};

// Indexed [method][example][metric]; timings in milliseconds.
struct EvalResult {
    std::vector<std::vector<std::vector<double>>> values;
    std::vector<std::vector<double>> attribution_ms;
    std::vector<std::vector<std::vector<double>>> metric_ms;
};

EvalResult evaluate_serial(const EvalTask& task);
EvalResult evaluate_parallel(const EvalTask& task, int workers);

// Per-job inputs, shared by both drivers.
const CompiledModel& model_for(std::span<const CompiledModel> models, int model_id);
MethodConfig job_config(const EvalTask& task, std::size_t method_index, std::size_t example_index);

}  // namespace xaib
