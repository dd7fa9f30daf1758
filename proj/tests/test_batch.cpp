#include <cstdlib>

#include "doctest.h"
#include "helpers.hpp"
#include "xaib/batch.hpp"

using namespace xaib;
using xaib::test::model;

namespace {

struct Fixture {
    std::vector<CompiledModel> models{model(1), model(2)};
    std::vector<CorpusExample> examples;

    Fixture() {
        for (int id : {1, 2}) {
            const auto c = to_corpus(build_test_set(model(id), 2, 9), id, 9, 2);
            examples.insert(examples.end(), c.examples.begin(), c.examples.end());
        }
    }

    EvalTask task() const {
        EvalTask t;
        t.models = models;
        t.examples = examples;
        MethodConfig sg;
        sg.sg_samples = 4;
        MethodConfig rise;
        rise.rise_masks = 40;
        t.methods = {{Method::Saliency, {}}, {Method::SmoothGrad, sg}, {Method::RISE, rise}, {Method::GuidedBackprop, {}}};
        t.metrics = {"cor_ns", "cor_s", "cpa>", "F1", "Del"};
        t.seed = 21;
        return t;
    }
};

}  // namespace

TEST_CASE("parallel evaluation reproduces the serial values") {
    const Fixture f;
    const EvalTask t = f.task();
    const EvalResult s = evaluate_serial(t);
    REQUIRE(s.values.size() == 4);
    REQUIRE(s.values[0].size() == f.examples.size());
    REQUIRE(s.values[0][0].size() == 5);
    for (int workers : {1, 3, 8}) {
        const EvalResult p = evaluate_parallel(t, workers);
        CHECK(p.values == s.values);
        CHECK(p.attribution_ms.size() == s.attribution_ms.size());
    }
    for (const auto& per_method : s.values)
        for (const auto& per_example : per_method)
            for (double v : per_example) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
            }
}

TEST_CASE("sampled jobs get distinct seeds per method and example") {
    const Fixture f;
    const EvalTask t = f.task();
    CHECK(job_config(t, 1, 0).rng_seed != job_config(t, 1, 1).rng_seed);
    CHECK(job_config(t, 1, 0).rng_seed != job_config(t, 2, 0).rng_seed);
    CHECK(job_config(t, 1, 3).rng_seed == job_config(t, 1, 3).rng_seed);
    CHECK(job_config(t, 1, 0).sg_samples == 4);
    CHECK(&model_for(t.models, 2) == &t.models[1]);
    CHECK_THROWS(model_for(t.models, 4));
}

TEST_CASE("parallel corpus generation matches the serial one") {
    for (int id : {0, 3}) {
        const auto s = build_test_set(model(id), 3, 41);
        for (int workers : {1, 4}) {
            const auto p = build_test_set_parallel(model(id), 3, 41, workers);
            REQUIRE(p.size() == s.size());
            for (std::size_t i = 0; i < s.size(); ++i) {
                CHECK(p[i].id == s[i].id);
                CHECK(p[i].image == s[i].image);
                CHECK(p[i].gt.gt3d == s[i].gt.gt3d);
                CHECK(p[i].gt.gt2d == s[i].gt.gt2d);
            }
        }
    }
}

TEST_CASE("worker count from the environment") {
    setenv(kWorkersEnv, "3", 1);
    CHECK(worker_count() == 3);
    setenv(kWorkersEnv, "zero", 1);
    CHECK_THROWS_AS(worker_count(), std::invalid_argument);
    setenv(kWorkersEnv, "0", 1);
    CHECK_THROWS_AS(worker_count(), std::invalid_argument);
    setenv(kWorkersEnv, "2x", 1);
    CHECK_THROWS_AS(worker_count(), std::invalid_argument);
    unsetenv(kWorkersEnv);
    CHECK(worker_count() >= 1);
}

TEST_CASE("evaluation rejects unknown metrics and mismatched examples") {
    const Fixture f;
    EvalTask t = f.task();
    t.metrics = {"SSIM"};
    CHECK_THROWS(evaluate_serial(t));
    CHECK_THROWS(evaluate_parallel(t, 2));
}
