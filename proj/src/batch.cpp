#include "xaib/batch.hpp"

#include <chrono>
#include <cstdlib>
#include <exception>
#include <stdexcept>

#include <omp.h>

#include "xaib/metrics.hpp"

namespace xaib {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); }

EvalResult sized_result(const EvalTask& task) {
    EvalResult r;
    const std::size_t nm = task.methods.size(), ne = task.examples.size(), nk = task.metrics.size();
    r.values.assign(nm, std::vector<std::vector<double>>(ne, std::vector<double>(nk, 0.0)));
    r.metric_ms = r.values;
    r.attribution_ms.assign(nm, std::vector<double>(ne, 0.0));
    return r;
}

void run_job(const EvalTask& task, std::size_t mi, std::size_t ei, EvalResult& out) {
    const CorpusExample& ex = task.examples[ei];
    const CompiledModel& model = model_for(task.models, ex.model_id);
    const Method method = task.methods[mi].method;
    const MethodConfig cfg = job_config(task, mi, ei);
    const Explanation e = attribute(method, model, ex.image, ex.class_label, cfg, &ex.gt3d);
    const Tensor& gt = e.dims == Dims::D2 ? ex.gt2d : ex.gt3d;
    out.attribution_ms[mi][ei] = e.elapsed_ms;
    const MetricContext ctx{e.values, gt, &model, &ex.image, ex.class_label};
    for (std::size_t k = 0; k < task.metrics.size(); ++k) {
        const auto t0 = Clock::now();
        out.values[mi][ei][k] = compute_metric(task.metrics[k], ctx);
        out.metric_ms[mi][ei][k] = ms_since(t0);
    }
}

// Untimed first call per method so lazy initialization does not land in the timings.
void warm_up(const EvalTask& task) {
    if (task.examples.empty()) return;
    const CorpusExample& ex = task.examples.front();
    const CompiledModel& model = model_for(task.models, ex.model_id);
    for (std::size_t mi = 0; mi < task.methods.size(); ++mi) {
        (void)attribute_raw(task.methods[mi].method, model, ex.image, ex.class_label, job_config(task, mi, 0),
                            &ex.gt3d);
    }
}

}  // namespace

int worker_count() {
    const char* env = std::getenv(kWorkersEnv);
    if (env == nullptr || *env == '\0') return omp_get_max_threads();
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1 || v > 4096) {
        throw std::invalid_argument(std::string(kWorkersEnv) + " must be a positive integer, got '" + env + "'");
    }
    return static_cast<int>(v);
}

std::vector<Example> build_test_set_parallel(const CompiledModel& model, int per_class, std::uint64_t seed,
                                             int workers) {
    const auto slots = example_slots(model.concept_id, per_class, model.definitions);
    std::vector<Example> out(slots.size());
    std::vector<std::exception_ptr> errors(slots.size());
    const auto n = static_cast<std::ptrdiff_t>(slots.size());
#pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            out[i] = build_example(model, slots[i].class_label, slots[i].k, seed);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

const CompiledModel& model_for(std::span<const CompiledModel> models, int model_id) {
    for (const auto& m : models) {
        if (m.concept_id == model_id) return m;
    }
    throw std::invalid_argument("no compiled model for model id " + std::to_string(model_id));
}

MethodConfig job_config(const EvalTask& task, std::size_t method_index, std::size_t example_index) {
    MethodConfig cfg = task.methods[method_index].config;
    cfg.rng_seed = derive_seed(task.seed, static_cast<std::uint64_t>(task.methods[method_index].method),
                               static_cast<std::uint64_t>(example_index));
    return cfg;
}

EvalResult evaluate_serial(const EvalTask& task) {
    EvalResult r = sized_result(task);
    warm_up(task);
    for (std::size_t mi = 0; mi < task.methods.size(); ++mi) {
        for (std::size_t ei = 0; ei < task.examples.size(); ++ei) run_job(task, mi, ei, r);
    }
    return r;
}

EvalResult evaluate_parallel(const EvalTask& task, int workers) {
    if (workers < 1) throw std::invalid_argument("workers must be at least 1");
    EvalResult r = sized_result(task);
    warm_up(task);
    const std::size_t ne = task.examples.size();
    const auto n = static_cast<std::ptrdiff_t>(task.methods.size() * ne);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (std::ptrdiff_t j = 0; j < n; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        try {
            run_job(task, ju / ne, ju % ne, r);
        } catch (...) {
            errors[ju] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return r;
}

}  // namespace xaib
