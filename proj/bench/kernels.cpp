// Serial drivers against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include <vector>

#include "xaib/batch.hpp"

using namespace xaib;

namespace {

struct Workload {
    std::vector<CompiledModel> models;
    std::vector<CorpusExample> examples;

    Workload() {
        for (int id = 0; id < 5; ++id) {
            models.push_back(compile_model(id));
            const auto c = to_corpus(build_test_set(models.back(), 2, 3), id, 3, 2);
            examples.insert(examples.end(), c.examples.begin(), c.examples.end());
        }
    }

    EvalTask task() const {
        EvalTask t;
        t.models = models;
        t.examples = examples;
        MethodConfig ig;
        ig.ig_steps = 32;
        MethodConfig sg;
        sg.sg_samples = 10;
        t.methods = {{Method::Saliency, {}}, {Method::IntegratedGradients, ig}, {Method::SmoothGrad, sg},
                     {Method::Occlusion, {}}, {Method::GradCAM, {}}};
        t.metrics = {"cor_ns", "cor_s", "F1", "Del"};
        t.seed = 1;
        return t;
    }
};

const Workload& workload() {
    static const Workload w;
    return w;
}

void BM_EvaluateSerial(benchmark::State& state) {
    const EvalTask t = workload().task();
    for (auto _ : state) benchmark::DoNotOptimize(evaluate_serial(t));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(t.examples.size() * t.methods.size()));
}
BENCHMARK(BM_EvaluateSerial)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_EvaluateParallel(benchmark::State& state) {
    const EvalTask t = workload().task();
    const int workers = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(evaluate_parallel(t, workers));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(t.examples.size() * t.methods.size()));
}
BENCHMARK(BM_EvaluateParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_BuildTestSetSerial(benchmark::State& state) {
    const CompiledModel& m = workload().models[1];
    for (auto _ : state) benchmark::DoNotOptimize(build_test_set(m, 4, 7));
}
BENCHMARK(BM_BuildTestSetSerial)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_BuildTestSetParallel(benchmark::State& state) {
    const CompiledModel& m = workload().models[1];
    const int workers = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(build_test_set_parallel(m, 4, 7, workers));
}
BENCHMARK(BM_BuildTestSetParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
