#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "doctest.h"
#include "xaib/bench.hpp"

using namespace xaib;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::filesystem::path scratch(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("xaib_test_bench_" + name);
    std::filesystem::remove_all(p);
    return p;
}

BenchConfig small_config(const std::string& dir) {
    BenchConfig cfg = parse_bench_config(json{{"runs", 2},
                                              {"per_class", 1},
                                              {"models", {1, 4}},
                                              {"methods", {"saliency", json{{"name", "smoothgrad"}, {"sg_samples", 3}}}},
                                              {"metrics", {"cor_ns", "cpa>", "F1"}},
                                              {"gallery_examples", 2}});
    cfg.output_dir = scratch(dir);
    return cfg;
}

}  // namespace

TEST_CASE("config defaults and parsing") {
    const BenchConfig d = parse_bench_config(json::object());
    CHECK(d.runs == 3);
    CHECK(d.seeds == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(d.per_class == 16);
    CHECK(d.models == std::vector<int>{0, 1, 2, 3, 4});
    CHECK(d.methods.size() == 12);
    CHECK(d.metrics.size() == 22);

    const BenchConfig c = parse_bench_config(json{{"version", 1},
                                                  {"seeds", {5, 9}},
                                                  {"methods", {json{{"name", "integrated-gradients"}, {"ig_steps", 16}}}},
                                                  {"method_defaults", {{"sg_samples", 4}}},
                                                  {"metrics", {"cor_s"}},
                                                  {"output_dir", "x"}});
    CHECK(c.runs == 2);
    CHECK(c.seeds == std::vector<std::uint64_t>{5, 9});
    REQUIRE(c.methods.size() == 1);
    CHECK(c.methods[0].method == Method::IntegratedGradients);
    CHECK(c.methods[0].config.ig_steps == 16);
    CHECK(c.methods[0].config.sg_samples == 4);
    CHECK(c.output_dir == "x");

    const json round = to_json(c);
    const BenchConfig again = parse_bench_config(round);
    CHECK(again.seeds == c.seeds);
    CHECK(again.methods[0].config.ig_steps == 16);
    CHECK(to_json(again) == round);
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(parse_bench_config(json{{"runs", 0}}), ConfigError);
    CHECK_THROWS_AS(parse_bench_config(json{{"version", 7}}), ConfigError);
    CHECK_THROWS_AS(parse_bench_config(json{{"methods", {"lime"}}}), ConfigError);
    CHECK_THROWS_AS(parse_bench_config(json{{"metrics", {"SSIM"}}}), ConfigError);
    CHECK_THROWS_AS(parse_bench_config(json{{"models", {5}}}), ConfigError);
    CHECK_THROWS_AS(parse_bench_config(json{{"runs", 2}, {"seeds", {1}}}), ConfigError);
    CHECK_THROWS_AS(parse_bench_config(json{{"per_class", "many"}}), ConfigError);
    CHECK_THROWS_AS(parse_bench_config(json{{"colour", 1}}), ConfigError);
    CHECK_THROWS_AS(parse_bench_config(json{{"methods", {json{{"name", "rise"}, {"rise_keep_prob", 2.0}}}}}), ConfigError);
    CHECK_THROWS_AS(load_bench_config("/nonexistent/bench.json"), ConfigError);
}

TEST_CASE("summaries use the population deviation") {
    const CellStats s = summarize({1.0, 2.0, 3.0});
    CHECK(s.mean == 2.0);
    CHECK(s.std == doctest::Approx(std::sqrt(2.0 / 3.0)));
    CHECK(s.per_run.size() == 3);
    CHECK(summarize({0.4}).std == 0.0);
}

TEST_CASE("a small benchmark writes every output and is reproducible") {
    const BenchConfig cfg = small_config("a");
    std::ostringstream log;
    const BenchReport r = run_benchmark(cfg, 2, &log);
    const auto& dir = cfg.output_dir;
    for (const char* f : {"report.json", "report.csv", "report.txt", "timing.json", "gallery.png", "gallery/gallery.json"}) {
        CAPTURE(f);
        CHECK(std::filesystem::exists(dir / f));
    }
    CHECK_FALSE(std::filesystem::exists(dir / "STALE"));
    CHECK(r.methods == std::vector<std::string>{"saliency", "smoothgrad"});
    CHECK(r.dims == std::vector<std::string>{"2D", "3D"});
    CHECK(r.examples_per_run == 3 + 5);
    REQUIRE(r.cells.size() == 3);
    for (const auto& row : r.cells) {
        for (const auto& cell : row) {
            CHECK(cell.per_run.size() == 2);
            CHECK(cell.mean >= 0.0);
            CHECK(cell.mean <= 1.0);
        }
    }
    CHECK(r.has_timing);
    CHECK(r.timing.method_ms.size() == 2);

    const std::string table = render_table(r);
    CHECK(table.find("Δ(min,max)") != std::string::npos);
    CHECK(table.find("saliency (2D)") != std::string::npos);
    CHECK(table.find("Time") != std::string::npos);

    BenchConfig cfg2 = cfg;
    cfg2.output_dir = scratch("b");
    run_benchmark(cfg2, 1, nullptr);
    CHECK(slurp(dir / "report.json") == slurp(cfg2.output_dir / "report.json"));
    CHECK(slurp(dir / "report.csv") == slurp(cfg2.output_dir / "report.csv"));

    const BenchReport loaded = load_report(dir / "report.json");
    CHECK(report_to_json(loaded) == report_to_json(r));
    CHECK(loaded.has_timing);

    const BenchReport from_csv = parse_csv(render_csv(r));
    CHECK(from_csv.methods == r.methods);
    CHECK(from_csv.metrics == r.metrics);
    for (std::size_t m = 0; m < r.metrics.size(); ++m) {
        for (std::size_t k = 0; k < r.methods.size(); ++k) {
            CHECK(from_csv.cells[m][k].mean == r.cells[m][k].mean);
            CHECK(from_csv.cells[m][k].std == r.cells[m][k].std);
            CHECK(from_csv.cells[m][k].per_run == r.cells[m][k].per_run);
        }
        CHECK(from_csv.delta[m] == r.delta[m]);
    }

    const auto png = dir / "again.png";
    write_report(r, ReportFormat::PngGallery, png, dir / "gallery");
    CHECK(std::filesystem::file_size(png) > 0);
    CHECK_THROWS_AS(report_format_from_string("yaml"), ConfigError);
    CHECK(report_format_from_string("png-gallery") == ReportFormat::PngGallery);

    std::filesystem::remove_all(dir);
    std::filesystem::remove_all(cfg2.output_dir);
}

TEST_CASE("the identity method scores perfect correctness") {
    BenchConfig cfg = parse_bench_config(json{{"runs", 3},
                                              {"per_class", 1},
                                              {"methods", {"identity-gt"}},
                                              {"metrics", {"cor_ns", "cor_s", "cor!=", "cor>", "cor<", "cpl>", "cpa<"}},
                                              {"gallery_examples", 1}});
    cfg.output_dir = scratch("identity");
    const BenchReport r = run_benchmark(cfg, 2);
    CHECK(r.examples_per_run == 19);
    for (const auto& row : r.cells) {
        CHECK(row[0].mean == 1.0);
        CHECK(row[0].std == 0.0);
        CHECK(row[0].per_run.size() == 3);
    }
    std::filesystem::remove_all(cfg.output_dir);
}

TEST_CASE("a failing stage names itself and leaves the output stale") {
    BenchConfig cfg = small_config("stale");
    cfg.runs = 1;
    cfg.seeds = {17};
    std::filesystem::create_directories(cfg.output_dir / "report.json");
    try {
        run_benchmark(cfg, 1);
        FAIL("expected a stage failure");
    } catch (const StageError& e) {
        CHECK(e.stage() == "report");
        CHECK(e.seed() == 17);
        CHECK(std::string(e.what()).find("report") != std::string::npos);
    }
    CHECK(std::filesystem::exists(cfg.output_dir / "STALE"));
    std::filesystem::remove_all(cfg.output_dir);
}
