#include "xaib/explanation_io.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace xaib {

using nlohmann::json;

void write_explanations(const ExplanationSet& set, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    json files = json::array();
    json timing = json::object();
    for (const auto& e : set.items) {
        const std::string name = e.example_id + "_explanation.t3";
        write_t3(dir / name, e.values);
        files.push_back({{"path", name},
                         {"role", "explanation"},
                         {"example_id", e.example_id},
                         {"class_label", e.class_label},
                         {"model_id", e.model_id}});
        timing[e.example_id] = e.elapsed_ms;
    }
    const json m = {{"format", "xaib-explanations"},
                    {"version", 1},
                    {"method", set.method},
                    {"dims", set.dims},
                    {"files", files}};
    std::ofstream os(dir / "manifest.json");
    os << m.dump(2) << '\n';
    std::ofstream ts(dir / "timing.json");
    ts << json{{"unit", "ms"}, {"elapsed", timing}}.dump(2) << '\n';
    if (!os || !ts) throw std::runtime_error("failed writing explanations to " + dir.string());
}

ExplanationSet read_explanations(const std::filesystem::path& dir) {
    std::ifstream is(dir / "manifest.json");
    if (!is) throw std::runtime_error("missing explanation manifest in " + dir.string());
    ExplanationSet set;
    try {
        const json m = json::parse(is);
        if (m.value("format", "") != "xaib-explanations") {
            throw std::runtime_error("not an explanation manifest: " + dir.string());
        }
        set.method = m.at("method").get<std::string>();
        set.dims = m.at("dims").get<std::string>();
        if (set.dims != "2D" && set.dims != "3D") throw std::runtime_error("dims must be 2D or 3D");
        json timing;
        if (std::ifstream ts(dir / "timing.json"); ts) timing = json::parse(ts).value("elapsed", json::object());
        for (const auto& f : m.at("files")) {
            if (f.value("role", "explanation") != "explanation") continue;
            StoredExplanation e;
            e.example_id = f.at("example_id").get<std::string>();
            e.model_id = f.at("model_id").get<int>();
            e.class_label = f.at("class_label").get<int>();
            e.values = read_t3(dir / f.at("path").get<std::string>());
            const std::size_t want = set.dims == "2D" ? 1 : 3;
            if (e.values.c() != want) {
                throw std::runtime_error(e.example_id + ": " + std::to_string(e.values.c()) +
                                         "-channel tensor in a " + set.dims + " explanation set");
            }
            if (timing.is_object() && timing.contains(e.example_id)) e.elapsed_ms = timing.at(e.example_id).get<double>();
            set.items.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed explanation manifest: " + std::string(e.what()));
    }
    return set;
}

}  // namespace xaib
