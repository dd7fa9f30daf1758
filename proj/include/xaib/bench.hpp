#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "xaib/batch.hpp"

namespace xaib {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A pipeline stage failed; what() names the stage and the run seed.
class StageError : public std::runtime_error {
public:
    StageError(const std::string& stage, std::uint64_t seed, const std::string& detail);
    const std::string& stage() const { return stage_; }
    std::uint64_t seed() const { return seed_; }

private:
    std::string stage_;
    std::uint64_t seed_;
};

inline constexpr int kBenchConfigVersion = 1;

struct BenchConfig {
    int runs = 3;
    std::vector<std::uint64_t> seeds;  // one per run
    int per_class = kDefaultPerClass;
    std::vector<int> models{0, 1, 2, 3, 4};
    std::vector<MethodSpec> methods;
    std::vector<std::string> metrics;
    int gallery_examples = 4;
    std::filesystem::path output_dir = "bench-out";
};

// Missing keys take the defaults above; an empty method list means all
// benchmark methods, an empty metric list all metrics.
BenchConfig parse_bench_config(const nlohmann::json& j);
BenchConfig load_bench_config(const std::filesystem::path& path);
nlohmann::json to_json(const BenchConfig& cfg);
nlohmann::json method_config_to_json(const MethodConfig& cfg);
// Applies the keys present in `j` on top of `base`.
MethodConfig method_config_from_json(const nlohmann::json& j, MethodConfig base = {});

struct CellStats {
    std::vector<double> per_run;  // mean over examples, one per run
    double mean = 0.0;
    double std = 0.0;  // population std over runs
};

CellStats summarize(std::vector<double> per_run);

struct BenchReport {
    nlohmann::json config;
    std::vector<std::string> methods;
    std::vector<std::string> dims;
    std::vector<std::string> metrics;
    std::vector<std::uint64_t> seeds;
    std::size_t examples_per_run = 0;
    std::vector<std::vector<CellStats>> cells;  // [metric][method]
    std::vector<double> delta;                  // per metric: max - min of the method means

    // Kept out of the JSON report so that it stays reproducible.
    struct Timing {
        int workers = 1;
        std::vector<CellStats> method_ms;  // per method, mean ms per explanation
        std::vector<CellStats> metric_ms;  // per metric, mean ms per evaluation
        nlohmann::json machine;
    };
    Timing timing;
    bool has_timing = false;

    const CellStats& cell(const std::string& metric, const std::string& method) const;
};

// Runs every stage, writes report.json, report.csv, report.txt, timing.json
// and the gallery under cfg.output_dir. A STALE marker stays in the output
// directory if any stage fails.
BenchReport run_benchmark(const BenchConfig& cfg, int workers, std::ostream* log = nullptr);

nlohmann::json report_to_json(const BenchReport& r);
BenchReport report_from_json(const nlohmann::json& j);
nlohmann::json timing_to_json(const BenchReport& r);
void timing_from_json(const nlohmann::json& j, BenchReport& r);

// Reads report.json and, when present, timing.json next to it.
BenchReport load_report(const std::filesystem::path& report_json);

std::string render_csv(const BenchReport& r);
BenchReport parse_csv(const std::string& text);
std::string render_table(const BenchReport& r);
// Gallery tensors are written by run_benchmark under <dir>/gallery.
void render_gallery(const std::filesystem::path& gallery_dir, const std::filesystem::path& png_path);

enum class ReportFormat { Json, Csv, Table, PngGallery };
ReportFormat report_format_from_string(const std::string& s);
void write_report(const BenchReport& r, ReportFormat format, const std::filesystem::path& out,
                  const std::filesystem::path& gallery_dir = {});

}  // namespace xaib
