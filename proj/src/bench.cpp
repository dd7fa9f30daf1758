#include "xaib/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <omp.h>

#include "xaib/gt.hpp"
#include "xaib/metrics.hpp"
#include "xaib/png.hpp"

namespace xaib {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kStaleMarker = "STALE";
constexpr std::size_t kTileScale = 3;
constexpr std::size_t kTileGap = 4;

template <typename F>
auto stage(const char* name, std::uint64_t seed, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, seed, e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << text;
    if (!os) throw std::runtime_error("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// Display width, counting each UTF-8 code point once.
std::size_t display_width(const std::string& s) {
    std::size_t n = 0;
    for (unsigned char ch : s) n += (ch & 0xC0) != 0x80;
    return n;
}

std::string pad(const std::string& s, std::size_t width, bool right) {
    const std::size_t w = display_width(s);
    if (w >= width) return s;
    const std::string fill(width - w, ' ');
    return right ? fill + s : s + fill;
}

json cell_to_json(const CellStats& c) { return {{"mean", c.mean}, {"std", c.std}, {"runs", c.per_run}}; }

CellStats cell_from_json(const json& j) {
    CellStats c;
    c.per_run = j.at("runs").get<std::vector<double>>();
    c.mean = j.at("mean").get<double>();
    c.std = j.at("std").get<double>();
    return c;
}

void split_fields(const std::string& line, std::vector<std::string>& fields) {
    fields.clear();
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) fields.push_back(cur);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
}

void write_gallery(const fs::path& dir, const std::vector<MethodSpec>& methods, std::span<const CompiledModel> models,
                   std::span<const CorpusExample> examples, int count, std::uint64_t seed) {
    fs::create_directories(dir);
    EvalTask task;
    task.models = models;
    task.examples = examples;
    task.methods = methods;
    task.seed = seed;
    json rows = json::array();
    const std::size_t n = examples.size();
    const std::size_t g = std::min<std::size_t>(static_cast<std::size_t>(std::max(count, 0)), n);
    for (std::size_t i = 0; i < g; ++i) {
        const std::size_t ei = i * n / g;
        const CorpusExample& ex = examples[ei];
        const CompiledModel& model = model_for(models, ex.model_id);
        write_t3(dir / (ex.id + "_input.t3"), ex.image);
        write_t3(dir / (ex.id + "_gt2d.t3"), ex.gt2d);
        json files = json::array();
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
            const Tensor raw = attribute_raw(methods[mi].method, model, ex.image, ex.class_label,
                                             job_config(task, mi, ei), &ex.gt3d);
            Tensor e = normalize(raw);
            if (e.c() != 1) e = to_2d(e);
            const std::string name = ex.id + "_" + to_string(methods[mi].method) + ".t3";
            write_t3(dir / name, e);
            files.push_back(name);
        }
        rows.push_back({{"id", ex.id},
                        {"class_label", ex.class_label},
                        {"input", ex.id + "_input.t3"},
                        {"gt2d", ex.id + "_gt2d.t3"},
                        {"explanations", files}});
    }
    json methods_json = json::array();
    for (const auto& m : methods) methods_json.push_back(to_string(m.method));
    write_text(dir / "gallery.json",
               json{{"format", "xaib-gallery"}, {"methods", methods_json}, {"rows", rows}}.dump(2) + "\n");
}

}  // namespace

StageError::StageError(const std::string& stage, std::uint64_t seed, const std::string& detail)
    : std::runtime_error("stage '" + stage + "' failed (seed " + std::to_string(seed) + "): " + detail),
      stage_(stage),
      seed_(seed) {}

json method_config_to_json(const MethodConfig& c) {
    json j = {{"ig_steps", c.ig_steps},
              {"sg_samples", c.sg_samples},
              {"sg_sigma", c.sg_sigma},
              {"occlusion_patch", {c.occlusion_ph, c.occlusion_pw}},
              {"occlusion_stride", {c.occlusion_sh, c.occlusion_sw}},
              {"occlusion_fill", c.occlusion_fill},
              {"rise_masks", c.rise_masks},
              {"rise_cell", c.rise_cell},
              {"rise_keep_prob", c.rise_keep_prob}};
    return j;
}

MethodConfig method_config_from_json(const json& j, MethodConfig c) {
    if (!j.is_object()) throw ConfigError("method parameters must be a JSON object");
    static const std::vector<std::string> known{"name",          "ig_steps",         "sg_samples",     "sg_sigma",
                                                "occlusion_patch", "occlusion_stride", "occlusion_fill", "rise_masks",
                                                "rise_cell",     "rise_keep_prob"};
    try {
        for (const auto& [key, value] : j.items()) {
            if (std::find(known.begin(), known.end(), key) == known.end()) {
                throw ConfigError("unknown method parameter '" + key + "'");
            }
        }
        if (j.contains("ig_steps")) c.ig_steps = j.at("ig_steps").get<int>();
        if (j.contains("sg_samples")) c.sg_samples = j.at("sg_samples").get<int>();
        if (j.contains("sg_sigma")) c.sg_sigma = j.at("sg_sigma").get<double>();
        if (j.contains("occlusion_patch")) {
            c.occlusion_ph = j.at("occlusion_patch").at(0).get<int>();
            c.occlusion_pw = j.at("occlusion_patch").at(1).get<int>();
        }
        if (j.contains("occlusion_stride")) {
            c.occlusion_sh = j.at("occlusion_stride").at(0).get<int>();
            c.occlusion_sw = j.at("occlusion_stride").at(1).get<int>();
        }
        if (j.contains("occlusion_fill")) c.occlusion_fill = j.at("occlusion_fill").get<double>();
        if (j.contains("rise_masks")) c.rise_masks = j.at("rise_masks").get<int>();
        if (j.contains("rise_cell")) c.rise_cell = j.at("rise_cell").get<int>();
        if (j.contains("rise_keep_prob")) c.rise_keep_prob = j.at("rise_keep_prob").get<double>();
        c.validate();
    } catch (const json::exception& e) {
        throw ConfigError("bad method parameter: " + std::string(e.what()));
    } catch (const AttributionError& e) {
        throw ConfigError(e.what());
    }
    return c;
}

BenchConfig parse_bench_config(const json& j) {
    if (!j.is_object()) throw ConfigError("bench config must be a JSON object");
    static const std::vector<std::string> known{"version", "runs",    "seeds",           "per_class", "models",
                                                "methods", "metrics", "method_defaults", "gallery_examples",
                                                "output_dir"};
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    BenchConfig c;
    try {
        const int version = j.value("version", kBenchConfigVersion);
        if (version != kBenchConfigVersion) throw ConfigError("unsupported config version " + std::to_string(version));
        if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        if (j.contains("runs")) {
            c.runs = j.at("runs").get<int>();
        } else if (!c.seeds.empty()) {
            c.runs = static_cast<int>(c.seeds.size());
        }
        if (c.runs < 1) throw ConfigError("runs must be at least 1");
        if (c.seeds.empty()) {
            for (int r = 0; r < c.runs; ++r) c.seeds.push_back(static_cast<std::uint64_t>(r + 1));
        }
        if (c.seeds.size() != static_cast<std::size_t>(c.runs)) {
            throw ConfigError("seeds lists " + std::to_string(c.seeds.size()) + " values for " +
                              std::to_string(c.runs) + " runs");
        }
        c.per_class = j.value("per_class", c.per_class);
        if (c.per_class < 1) throw ConfigError("per_class must be at least 1");
        if (j.contains("models")) c.models = j.at("models").get<std::vector<int>>();
        if (c.models.empty()) throw ConfigError("models must not be empty");
        for (int m : c.models) {
            if (m < 0 || m >= kNumConcepts) throw ConfigError("model id " + std::to_string(m) + " out of range");
        }
        MethodConfig defaults;
        if (j.contains("method_defaults")) defaults = method_config_from_json(j.at("method_defaults"));
        if (j.contains("methods")) {
            for (const auto& m : j.at("methods")) {
                MethodSpec spec;
                const std::string name = m.is_string() ? m.get<std::string>() : m.at("name").get<std::string>();
                try {
                    spec.method = method_from_string(name);
                } catch (const AttributionError& e) {
                    throw ConfigError(e.what());
                }
                spec.config = m.is_object() ? method_config_from_json(m, defaults) : defaults;
                c.methods.push_back(spec);
            }
        }
        if (c.methods.empty()) {
            for (Method m : benchmark_methods()) c.methods.push_back({m, defaults});
        }
        if (j.contains("metrics")) c.metrics = j.at("metrics").get<std::vector<std::string>>();
        if (c.metrics.empty()) c.metrics = metric_names();
        for (const auto& m : c.metrics) {
            const auto& names = metric_names();
            if (std::find(names.begin(), names.end(), m) == names.end()) throw ConfigError("unknown metric '" + m + "'");
        }
        c.gallery_examples = j.value("gallery_examples", c.gallery_examples);
        if (c.gallery_examples < 0) throw ConfigError("gallery_examples must not be negative");
        if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    } catch (const json::exception& e) {
        throw ConfigError("bad bench config: " + std::string(e.what()));
    }
    return c;
}

BenchConfig load_bench_config(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config " + path.string());
    json j;
    try {
        j = json::parse(is);
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_bench_config(j);
}

json to_json(const BenchConfig& c) {
    json methods = json::array();
    for (const auto& m : c.methods) {
        json e = method_config_to_json(m.config);
        e["name"] = to_string(m.method);
        methods.push_back(e);
    }
    return {{"version", kBenchConfigVersion}, {"runs", c.runs},     {"seeds", c.seeds},
            {"per_class", c.per_class},       {"models", c.models}, {"methods", methods},
            {"metrics", c.metrics},           {"gallery_examples", c.gallery_examples}};
}

CellStats summarize(std::vector<double> per_run) {
    CellStats c;
    c.per_run = std::move(per_run);
    if (c.per_run.empty()) return c;
    double s = 0.0;
    for (double v : c.per_run) s += v;
    c.mean = s / static_cast<double>(c.per_run.size());
    double ss = 0.0;
    for (double v : c.per_run) ss += (v - c.mean) * (v - c.mean);
    c.std = std::sqrt(ss / static_cast<double>(c.per_run.size()));
    return c;
}

const CellStats& BenchReport::cell(const std::string& metric, const std::string& method) const {
    const auto mi = std::find(metrics.begin(), metrics.end(), metric);
    const auto ni = std::find(methods.begin(), methods.end(), method);
    if (mi == metrics.end() || ni == methods.end()) {
        throw std::out_of_range("no report cell for " + metric + " / " + method);
    }
    return cells[static_cast<std::size_t>(mi - metrics.begin())][static_cast<std::size_t>(ni - methods.begin())];
}

BenchReport run_benchmark(const BenchConfig& cfg, int workers, std::ostream* log) {
    if (workers < 1) throw ConfigError("workers must be at least 1");
    const fs::path out = cfg.output_dir;
    fs::create_directories(out);
    const fs::path stale = out / kStaleMarker;
    write_text(stale, "running\n");

    BenchReport r;
    r.config = to_json(cfg);
    for (const auto& m : cfg.methods) {
        r.methods.push_back(to_string(m.method));
        r.dims.push_back(to_string(native_dims(m.method)));
    }
    r.metrics = cfg.metrics;
    r.seeds = cfg.seeds;
    const std::size_t nm = cfg.methods.size(), nk = cfg.metrics.size();
    std::vector<std::vector<std::vector<double>>> runs(nk, std::vector<std::vector<double>>(nm));
    std::vector<std::vector<double>> method_ms(nm), metric_ms(nk);

    try {
        for (std::size_t run = 0; run < cfg.seeds.size(); ++run) {
            const std::uint64_t seed = cfg.seeds[run];
            if (log) *log << "run " << run + 1 << "/" << cfg.seeds.size() << " (seed " << seed << ")\n";
            const auto models = stage("build-model", seed, [&] {
                std::vector<CompiledModel> ms;
                for (int id : cfg.models) ms.push_back(compile_model(id));
                return ms;
            });
            const auto examples = stage("gen-dataset", seed, [&] {
                std::vector<CorpusExample> all;
                for (const auto& m : models) {
                    const auto exs = build_test_set_parallel(m, cfg.per_class, seed, workers);
                    auto c = to_corpus(exs, m.concept_id, seed, cfg.per_class);
                    for (auto& e : c.examples) all.push_back(std::move(e));
                }
                return all;
            });
            if (log) *log << "  " << examples.size() << " examples\n";
            r.examples_per_run = examples.size();
            EvalTask task;
            task.models = models;
            task.examples = examples;
            task.methods = cfg.methods;
            task.metrics = cfg.metrics;
            task.seed = derive_seed(seed, 1, 0);
            const EvalResult res = stage("evaluate", seed, [&] { return evaluate_parallel(task, workers); });

            const std::size_t ne = examples.size();
            for (std::size_t mi = 0; mi < nm; ++mi) {
                double t = 0.0;
                for (std::size_t ei = 0; ei < ne; ++ei) t += res.attribution_ms[mi][ei];
                method_ms[mi].push_back(ne ? t / static_cast<double>(ne) : 0.0);
            }
            for (std::size_t k = 0; k < nk; ++k) {
                double t = 0.0;
                for (std::size_t mi = 0; mi < nm; ++mi) {
                    double s = 0.0;
                    for (std::size_t ei = 0; ei < ne; ++ei) {
                        const double v = res.values[mi][ei][k];
                        if (!std::isfinite(v)) {
                            throw StageError("evaluate", seed,
                                             cfg.metrics[k] + " is not finite for " + r.methods[mi] + " on " +
                                                 examples[ei].id);
                        }
                        s += v;
                        t += res.metric_ms[mi][ei][k];
                    }
                    runs[k][mi].push_back(ne ? s / static_cast<double>(ne) : 0.0);
                }
                metric_ms[k].push_back(ne && nm ? t / static_cast<double>(ne * nm) : 0.0);
            }
            if (run == 0 && cfg.gallery_examples > 0) {
                stage("gallery", seed, [&] {
                    write_gallery(out / "gallery", cfg.methods, models, examples, cfg.gallery_examples,
                                  task.seed);
                    render_gallery(out / "gallery", out / "gallery.png");
                    return 0;
                });
            }
        }

        r.cells.assign(nk, std::vector<CellStats>(nm));
        r.delta.assign(nk, 0.0);
        for (std::size_t k = 0; k < nk; ++k) {
            double lo = 0.0, hi = 0.0;
            for (std::size_t mi = 0; mi < nm; ++mi) {
                r.cells[k][mi] = summarize(runs[k][mi]);
                const double m = r.cells[k][mi].mean;
                lo = mi == 0 ? m : std::min(lo, m);
                hi = mi == 0 ? m : std::max(hi, m);
            }
            r.delta[k] = hi - lo;
        }
        r.has_timing = true;
        r.timing.workers = workers;
        for (auto& v : method_ms) r.timing.method_ms.push_back(summarize(v));
        for (auto& v : metric_ms) r.timing.metric_ms.push_back(summarize(v));
        r.timing.machine = {{"hardware_concurrency", std::thread::hardware_concurrency()},
                            {"omp_max_threads", omp_get_max_threads()},
                            {"workers", workers},
                            {"compiler", __VERSION__}};

        stage("report", cfg.seeds.front(), [&] {
            write_text(out / "report.json", report_to_json(r).dump(2) + "\n");
            write_text(out / "timing.json", timing_to_json(r).dump(2) + "\n");
            write_text(out / "report.csv", render_csv(r));
            write_text(out / "report.txt", render_table(r));
            return 0;
        });
    } catch (const StageError& e) {
        write_text(stale, std::string(e.what()) + "\n");
        throw;
    }
    fs::remove(stale);
    return r;
}

json report_to_json(const BenchReport& r) {
    json methods = json::array();
    for (std::size_t i = 0; i < r.methods.size(); ++i) methods.push_back({{"name", r.methods[i]}, {"dims", r.dims[i]}});
    json cells = json::array();
    for (std::size_t k = 0; k < r.metrics.size(); ++k) {
        json row = json::array();
        for (std::size_t mi = 0; mi < r.methods.size(); ++mi) row.push_back(cell_to_json(r.cells[k][mi]));
        cells.push_back({{"metric", r.metrics[k]}, {"delta", r.delta[k]}, {"methods", row}});
    }
    return {{"format", "xaib-bench-report"},
            {"version", 1},
            {"config", r.config},
            {"seeds", r.seeds},
            {"examples_per_run", r.examples_per_run},
            {"methods", methods},
            {"metrics", cells}};
}

BenchReport report_from_json(const json& j) {
    if (j.value("format", "") != "xaib-bench-report") throw ConfigError("not a benchmark report");
    BenchReport r;
    try {
        r.config = j.at("config");
        r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        r.examples_per_run = j.at("examples_per_run").get<std::size_t>();
        for (const auto& m : j.at("methods")) {
            r.methods.push_back(m.at("name").get<std::string>());
            r.dims.push_back(m.at("dims").get<std::string>());
        }
        for (const auto& row : j.at("metrics")) {
            r.metrics.push_back(row.at("metric").get<std::string>());
            r.delta.push_back(row.at("delta").get<double>());
            std::vector<CellStats> cells;
            for (const auto& c : row.at("methods")) cells.push_back(cell_from_json(c));
            if (cells.size() != r.methods.size()) throw ConfigError("report row has the wrong number of methods");
            r.cells.push_back(std::move(cells));
        }
    } catch (const json::exception& e) {
        throw ConfigError("malformed report: " + std::string(e.what()));
    }
    return r;
}

json timing_to_json(const BenchReport& r) {
    json methods = json::object();
    for (std::size_t i = 0; i < r.methods.size() && i < r.timing.method_ms.size(); ++i) {
        methods[r.methods[i]] = cell_to_json(r.timing.method_ms[i]);
    }
    json metrics = json::object();
    for (std::size_t k = 0; k < r.metrics.size() && k < r.timing.metric_ms.size(); ++k) {
        metrics[r.metrics[k]] = cell_to_json(r.timing.metric_ms[k]);
    }
    return {{"format", "xaib-bench-timing"},
            {"machine", r.timing.machine},
            {"unit", "ms"},
            {"method_ms_per_explanation", methods},
            {"metric_ms_per_evaluation", metrics}};
}

void timing_from_json(const json& j, BenchReport& r) {
    try {
        r.timing.machine = j.at("machine");
        r.timing.workers = r.timing.machine.value("workers", 1);
        r.timing.method_ms.clear();
        r.timing.metric_ms.clear();
        const auto& mj = j.at("method_ms_per_explanation");
        for (const auto& m : r.methods) r.timing.method_ms.push_back(mj.contains(m) ? cell_from_json(mj.at(m)) : CellStats{});
        const auto& kj = j.at("metric_ms_per_evaluation");
        for (const auto& k : r.metrics) r.timing.metric_ms.push_back(kj.contains(k) ? cell_from_json(kj.at(k)) : CellStats{});
        r.has_timing = true;
    } catch (const json::exception& e) {
        throw ConfigError("malformed timing file: " + std::string(e.what()));
    }
}

BenchReport load_report(const fs::path& report_json) {
    json j;
    try {
        j = json::parse(read_text(report_json));
    } catch (const json::exception& e) {
        throw ConfigError(report_json.string() + " is not valid JSON: " + e.what());
    } catch (const std::runtime_error& e) {
        throw ConfigError(e.what());
    }
    BenchReport r = report_from_json(j);
    const fs::path timing = report_json.parent_path() / "timing.json";
    if (fs::exists(timing)) {
        try {
            timing_from_json(json::parse(read_text(timing)), r);
        } catch (const json::exception& e) {
            throw ConfigError(timing.string() + " is not valid JSON: " + e.what());
        }
    }
    return r;
}

std::string render_csv(const BenchReport& r) {
    std::ostringstream os;
    os << "metric,method,dims,mean,std";
    const std::size_t nr = r.seeds.size();
    for (std::size_t i = 0; i < nr; ++i) os << ",run_" << i + 1;
    os << "\n";
    for (std::size_t k = 0; k < r.metrics.size(); ++k) {
        for (std::size_t mi = 0; mi < r.methods.size(); ++mi) {
            const CellStats& c = r.cells[k][mi];
            os << r.metrics[k] << ',' << r.methods[mi] << ',' << r.dims[mi] << ',' << fmt("%.17g", c.mean) << ','
               << fmt("%.17g", c.std);
            for (double v : c.per_run) os << ',' << fmt("%.17g", v);
            os << "\n";
        }
        os << r.metrics[k] << ",delta,," << fmt("%.17g", r.delta[k]) << ',';
        for (std::size_t i = 0; i < nr; ++i) os << ',';
        os << "\n";
    }
    return os.str();
}

BenchReport parse_csv(const std::string& text) {
    BenchReport r;
    std::istringstream is(text);
    std::string line;
    std::vector<std::string> f;
    if (!std::getline(is, line)) throw ConfigError("empty CSV report");
    split_fields(line, f);
    if (f.size() < 5 || f[0] != "metric") throw ConfigError("CSV report has an unexpected header");
    const std::size_t nr = f.size() - 5;
    r.seeds.assign(nr, 0);
    std::map<std::string, std::size_t> method_index;
    try {
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            split_fields(line, f);
            if (f.size() < 5) throw ConfigError("short CSV row: " + line);
            if (r.metrics.empty() || r.metrics.back() != f[0]) {
                r.metrics.push_back(f[0]);
                r.cells.emplace_back();
                r.delta.push_back(0.0);
            }
            if (f[1] == "delta") {
                r.delta.back() = std::stod(f[3]);
                continue;
            }
            if (!method_index.count(f[1])) {
                method_index[f[1]] = r.methods.size();
                r.methods.push_back(f[1]);
                r.dims.push_back(f[2]);
            }
            std::vector<double> per_run;
            for (std::size_t i = 0; i < nr && 5 + i < f.size(); ++i) per_run.push_back(std::stod(f[5 + i]));
            CellStats c;
            c.per_run = per_run;
            c.mean = std::stod(f[3]);
            c.std = std::stod(f[4]);
            r.cells.back().push_back(c);
        }
    } catch (const std::logic_error& e) {
        throw ConfigError("bad number in CSV report: " + std::string(e.what()));
    }
    return r;
}

std::string render_table(const BenchReport& r) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{""};
    for (std::size_t mi = 0; mi < r.methods.size(); ++mi) header.push_back(r.methods[mi] + " (" + r.dims[mi] + ")");
    header.push_back("Δ(min,max)");
    if (r.has_timing) header.push_back("metric ms");
    rows.push_back(header);
    for (std::size_t k = 0; k < r.metrics.size(); ++k) {
        std::vector<std::string> row{r.metrics[k]};
        for (const auto& c : r.cells[k]) row.push_back(fmt("%.3f", c.mean) + "±" + fmt("%.3f", c.std));
        row.push_back(fmt("%.3f", r.delta[k]));
        if (r.has_timing) {
            const auto& t = r.timing.metric_ms[k];
            row.push_back(fmt("%.3f", t.mean) + "±" + fmt("%.3f", t.std));
        }
        rows.push_back(row);
    }
    if (r.has_timing) {
        std::vector<std::string> row{"Time"};
        for (const auto& t : r.timing.method_ms) row.push_back(fmt("%.2f", t.mean));
        row.emplace_back("");
        row.emplace_back("");
        rows.push_back(row);
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& row : rows)
        for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], display_width(row[i]));
    std::ostringstream os;
    os << "examples per run: " << r.examples_per_run << ", runs: " << r.seeds.size() << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << "  ";
            os << pad(row[i], width[i], i > 0);
        }
        os << "\n";
    }
    if (r.has_timing) os << "Time: mean ms per explanation; workers: " << r.timing.workers << "\n";
    return os.str();
}

void render_gallery(const fs::path& gallery_dir, const fs::path& png_path) {
    json g;
    try {
        g = json::parse(read_text(gallery_dir / "gallery.json"));
    } catch (const json::exception& e) {
        throw ConfigError("gallery manifest is not valid JSON: " + std::string(e.what()));
    }
    const auto& rows = g.at("rows");
    const std::size_t cols = 2 + g.at("methods").size();
    const std::size_t tile = 36 * kTileScale;
    const std::size_t legend_h = 12;
    const std::size_t w = kTileGap + cols * (tile + kTileGap);
    const std::size_t h = kTileGap + rows.size() * (tile + kTileGap) + legend_h + kTileGap;
    RgbImage img(w, h, 160);
    std::size_t y = kTileGap;
    for (const auto& row : rows) {
        std::size_t x = kTileGap;
        blit(img, read_t3(gallery_dir / row.at("input").get<std::string>()), x, y, kTileScale);
        x += tile + kTileGap;
        blit(img, read_t3(gallery_dir / row.at("gt2d").get<std::string>()), x, y, kTileScale);
        for (const auto& f : row.at("explanations")) {
            x += tile + kTileGap;
            blit(img, read_t3(gallery_dir / f.get<std::string>()), x, y, kTileScale);
        }
        y += tile + kTileGap;
    }
    draw_legend(img, kTileGap, y, w - 2 * kTileGap, legend_h);
    write_png(png_path, img);
}

ReportFormat report_format_from_string(const std::string& s) {
    if (s == "json") return ReportFormat::Json;
    if (s == "csv") return ReportFormat::Csv;
    if (s == "table") return ReportFormat::Table;
    if (s == "png-gallery") return ReportFormat::PngGallery;
    throw ConfigError("unknown report format '" + s + "' (json, csv, table, png-gallery)");
}

void write_report(const BenchReport& r, ReportFormat format, const fs::path& out, const fs::path& gallery_dir) {
    switch (format) {
        case ReportFormat::Json: write_text(out, report_to_json(r).dump(2) + "\n"); break;
        case ReportFormat::Csv: write_text(out, render_csv(r)); break;
        case ReportFormat::Table: write_text(out, render_table(r)); break;
        case ReportFormat::PngGallery:
            if (gallery_dir.empty() || !fs::exists(gallery_dir / "gallery.json")) {
                throw ConfigError("png-gallery needs the gallery directory written by bench");
            }
            render_gallery(gallery_dir, out);
            break;
    }
}

}  // namespace xaib
