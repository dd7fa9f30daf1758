// Command-line front end: build-model, gen-dataset, explain, evaluate, report, bench.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "xaib/attribution.hpp"
#include "xaib/batch.hpp"
#include "xaib/bench.hpp"
#include "xaib/compiler.hpp"
#include "xaib/dataset.hpp"
#include "xaib/explanation_io.hpp"
#include "xaib/gt.hpp"
#include "xaib/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace xaib;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitStage = 2;

// Anything thrown while reading arguments and inputs is a config error.
template <typename F>
auto configure(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
}

template <typename F>
auto run_stage(const char* name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, 0, e.what());
    }
}

CompiledModel model_from(const std::string& dir, int model_id) {
    if (!dir.empty()) {
        CompiledModel m = configure([&] { return load_model(dir); });
        if (m.concept_id != model_id) {
            throw ConfigError("model in " + dir + " has concept id " + std::to_string(m.concept_id) +
                              ", corpus needs " + std::to_string(model_id));
        }
        return m;
    }
    return run_stage("build-model", [&] { return compile_model(model_id); });
}

void write_json(const fs::path& path, const json& j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << j.dump(2) << "\n";
}

struct Options {
    int concept_id = 0;
    int model_id = 0;
    std::uint64_t seed = 0;
    int per_class = kDefaultPerClass;
    std::string out;
    std::string model_dir;
    std::string method;
    std::string corpus;
    std::string params;
    std::string explanations;
    std::string metrics;
    std::string in;
    std::string format = "table";
    std::string gallery;
    std::string config;
    std::optional<int> runs;
    std::vector<std::uint64_t> seeds;
    std::optional<int> bench_per_class;
    std::string methods;
    bool quiet = false;
};

int cmd_build_model(const Options& o) {
    if (o.concept_id < 0 || o.concept_id >= kNumConcepts) throw ConfigError("--concept-id must be in 0..4");
    const CompiledModel m = run_stage("build-model", [&] { return compile_model(o.concept_id); });
    run_stage("write", [&] {
        save_model(m, o.out);
        return 0;
    });
    std::cout << "model " << o.concept_id << " written to " << o.out << "\n";
    return kExitOk;
}

int cmd_gen_dataset(const Options& o, int workers) {
    if (o.model_id < 0 || o.model_id >= kNumConcepts) throw ConfigError("--model-id must be in 0..4");
    if (o.per_class < 1) throw ConfigError("--per-class must be at least 1");
    const CompiledModel m = model_from(o.model_dir, o.model_id);
    const auto examples =
        run_stage("gen-dataset", [&] { return build_test_set_parallel(m, o.per_class, o.seed, workers); });
    run_stage("write", [&] {
        write_corpus(to_corpus(examples, o.model_id, o.seed, o.per_class), o.out);
        return 0;
    });
    std::cout << examples.size() << " examples written to " << o.out << "\n";
    return kExitOk;
}

int cmd_explain(const Options& o) {
    const Method method = configure([&] { return method_from_string(o.method); });
    const MethodConfig cfg = configure([&] {
        return o.params.empty() ? MethodConfig{} : method_config_from_json(json::parse(o.params));
    });
    const Corpus corpus = configure([&] { return read_corpus(o.corpus); });
    const CompiledModel model = model_from(o.model_dir, corpus.model_id);
    EvalTask task;
    const std::vector<CompiledModel> models{model};
    task.models = models;
    task.examples = corpus.examples;
    task.methods = {{method, cfg}};
    task.seed = o.seed;
    ExplanationSet set;
    set.method = to_string(method);
    set.dims = to_string(native_dims(method));
    run_stage("explain", [&] {
        for (std::size_t i = 0; i < corpus.examples.size(); ++i) {
            const auto& ex = corpus.examples[i];
            const Explanation e = attribute(method, model, ex.image, ex.class_label, job_config(task, 0, i), &ex.gt3d);
            set.items.push_back({ex.id, ex.model_id, ex.class_label, e.values, e.elapsed_ms});
        }
        write_explanations(set, o.out);
        return 0;
    });
    std::cout << set.items.size() << " " << set.method << " explanations written to " << o.out << "\n";
    return kExitOk;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (ch != ' ') {
            cur += ch;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

int cmd_evaluate(const Options& o) {
    std::vector<std::string> metrics = o.metrics.empty() ? metric_names() : split_list(o.metrics);
    for (const auto& m : metrics) {
        const auto& names = metric_names();
        if (std::find(names.begin(), names.end(), m) == names.end()) throw ConfigError("unknown metric '" + m + "'");
    }
    const Corpus corpus = configure([&] { return read_corpus(o.corpus); });
    const ExplanationSet set = configure([&] { return read_explanations(o.explanations); });
    std::map<std::string, const CorpusExample*> by_id;
    for (const auto& ex : corpus.examples) by_id[ex.id] = &ex;
    for (const auto& e : set.items) {
        if (!by_id.count(e.example_id)) throw ConfigError("explanation for unknown example '" + e.example_id + "'");
    }
    const CompiledModel model = model_from(o.model_dir, corpus.model_id);

    json per_example = json::array();
    std::vector<std::vector<double>> values(metrics.size());
    double time_sum = 0.0;
    run_stage("evaluate", [&] {
        for (const auto& e : set.items) {
            const CorpusExample& ex = *by_id.at(e.example_id);
            const Tensor& gt = set.dims == "2D" ? ex.gt2d : ex.gt3d;
            if (e.values.shape() != gt.shape()) {
                throw MetricError(e.example_id + ": explanation shape " + to_string(e.values.shape()) +
                                  " does not match " + set.dims + " GT shape " + to_string(gt.shape()));
            }
            const Tensor ev = normalize(e.values);
            const MetricContext ctx{ev, gt, &model, &ex.image, ex.class_label};
            json row = {{"id", e.example_id}, {"class_label", e.class_label}};
            for (std::size_t k = 0; k < metrics.size(); ++k) {
                const double v = compute_metric(metrics[k], ctx);
                values[k].push_back(v);
                row[metrics[k]] = v;
            }
            time_sum += e.elapsed_ms;
            per_example.push_back(row);
        }
        return 0;
    });
    json summary = json::array();
    for (std::size_t k = 0; k < metrics.size(); ++k) {
        const CellStats s = summarize(values[k]);
        summary.push_back({{"metric", metrics[k]}, {"mean", s.mean}, {"std", s.std}, {"n", values[k].size()}});
    }
    const double n = static_cast<double>(set.items.size());
    write_json(o.out, {{"format", "xaib-eval-report"},
                       {"method", set.method},
                       {"dims", set.dims},
                       {"model_id", corpus.model_id},
                       {"examples", set.items.size()},
                       {"time_ms", n > 0 ? time_sum / n : 0.0},
                       {"metrics", summary},
                       {"per_example", per_example}});
    for (const auto& s : summary) {
        std::printf("%-8s %.4f\n", s.at("metric").get<std::string>().c_str(), s.at("mean").get<double>());
    }
    return kExitOk;
}

int cmd_report(const Options& o) {
    const ReportFormat format = configure([&] { return report_format_from_string(o.format); });
    const BenchReport r = configure([&] { return load_report(o.in); });
    if (o.out.empty() || o.out == "-") {
        if (format == ReportFormat::PngGallery) throw ConfigError("png-gallery needs --out");
        if (format == ReportFormat::Json) std::cout << report_to_json(r).dump(2) << "\n";
        if (format == ReportFormat::Csv) std::cout << render_csv(r);
        if (format == ReportFormat::Table) std::cout << render_table(r);
        return kExitOk;
    }
    const fs::path gallery = o.gallery.empty() ? fs::path(o.in).parent_path() / "gallery" : fs::path(o.gallery);
    configure([&] {
        write_report(r, format, o.out, gallery);
        return 0;
    });
    return kExitOk;
}

int cmd_bench(const Options& o, int workers) {
    BenchConfig cfg = configure([&] {
        json j = o.config.empty() ? json::object() : [&] {
            std::ifstream is(o.config);
            if (!is) throw ConfigError("cannot read config " + o.config);
            return json::parse(is);
        }();
        // Flags override file values.
        if (o.runs) j["runs"] = *o.runs;
        if (!o.seeds.empty()) {
            j["seeds"] = o.seeds;
            if (!o.runs) j["runs"] = o.seeds.size();
        } else if (o.runs && j.contains("seeds") && j["seeds"].size() != static_cast<std::size_t>(*o.runs)) {
            j.erase("seeds");
        }
        if (o.bench_per_class) j["per_class"] = *o.bench_per_class;
        if (!o.methods.empty()) j["methods"] = split_list(o.methods);
        if (!o.metrics.empty()) j["metrics"] = split_list(o.metrics);
        if (!o.out.empty()) j["output_dir"] = o.out;
        return parse_bench_config(j);
    });
    const BenchReport r = run_benchmark(cfg, workers, o.quiet ? nullptr : &std::cerr);
    std::cout << render_table(r);
    std::cout << "report written to " << (cfg.output_dir / "report.json").string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ground-truth benchmark for attribution methods.\nWorker count: " + std::string(kWorkersEnv) +
                 " (defaults to the OpenMP thread count)."};
    app.require_subcommand(1);
    Options o;

    auto* build = app.add_subcommand("build-model", "Compile a concept model and write it to a directory");
    build->add_option("--concept-id", o.concept_id, "Concept id (0-4)")->required();
    build->add_option("--out", o.out, "Output directory")->required();

    auto* gen = app.add_subcommand("gen-dataset", "Generate a test set with ground truths");
    gen->add_option("--model-id", o.model_id, "Model / concept id (0-4)")->required();
    gen->add_option("--seed", o.seed, "Generation seed")->required();
    gen->add_option("--out", o.out, "Output directory")->required();
    gen->add_option("--per-class", o.per_class, "Examples per class")->capture_default_str();
    gen->add_option("--model", o.model_dir, "Use a saved model instead of compiling one");

    auto* explain = app.add_subcommand("explain", "Run one attribution method over a corpus");
    explain->add_option("--method", o.method, "Method name")->required();
    explain->add_option("--corpus", o.corpus, "Corpus directory")->required();
    explain->add_option("--out", o.out, "Output directory")->required();
    explain->add_option("--seed", o.seed, "Seed for sampled methods");
    explain->add_option("--params", o.params, "Method parameters as a JSON object");
    explain->add_option("--model", o.model_dir, "Use a saved model instead of compiling one");

    auto* evaluate = app.add_subcommand("evaluate", "Score stored explanations against a corpus");
    evaluate->add_option("--corpus", o.corpus, "Corpus directory")->required();
    evaluate->add_option("--explanations", o.explanations, "Explanation directory")->required();
    evaluate->add_option("--metrics", o.metrics, "Comma-separated metric names (default: all)");
    evaluate->add_option("--out", o.out, "Report path")->required();
    evaluate->add_option("--model", o.model_dir, "Use a saved model instead of compiling one");

    auto* report = app.add_subcommand("report", "Render a benchmark report");
    report->add_option("--in", o.in, "report.json written by bench")->required();
    report->add_option("--format", o.format, "json, csv, table or png-gallery")->capture_default_str();
    report->add_option("--out", o.out, "Output path (stdout when omitted)");
    report->add_option("--gallery", o.gallery, "Gallery directory (default: next to the report)");

    auto* bench = app.add_subcommand("bench", "Run the full pipeline and write the report");
    bench->add_option("--config", o.config, "JSON config file");
    bench->add_option("--out", o.out, "Output directory (overrides output_dir)");
    bench->add_option("--runs", o.runs, "Number of runs");
    bench->add_option("--seeds", o.seeds, "Run seeds")->delimiter(',');
    bench->add_option("--per-class", o.bench_per_class, "Examples per class");
    bench->add_option("--methods", o.methods, "Comma-separated methods");
    bench->add_option("--metrics", o.metrics, "Comma-separated metrics");
    bench->add_flag("--quiet", o.quiet, "No progress output");

    auto* parts = app.add_subcommand("parts", "Write the concept-part pattern set as JSON");
    parts->add_option("--out", o.out, "Output path (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        const auto workers = [] { return configure([] { return worker_count(); }); };
        if (*build) return cmd_build_model(o);
        if (*gen) return cmd_gen_dataset(o, workers());
        if (*explain) return cmd_explain(o);
        if (*evaluate) return cmd_evaluate(o);
        if (*report) return cmd_report(o);
        if (*bench) return cmd_bench(o, workers());
        if (*parts) {
            const std::string text = concept_parts_json(default_concept_parts());
            if (o.out.empty()) {
                std::cout << text;
            } else {
                std::ofstream(o.out) << text;
            }
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const StageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStage;
    }
    return kExitConfig;
}
