#include "xaib/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace xaib {

namespace {

void check_shapes(const Tensor& e, const Tensor& gt) {
    if (e.shape() != gt.shape()) {
        throw MetricError("explanation shape " + to_string(e.shape()) + " does not match GT shape " +
                          to_string(gt.shape()));
    }
    if (e.size() == 0) throw MetricError("empty tensors");
}

// Unit order by decreasing |E|, ties by index.
std::vector<std::size_t> ranking(const std::vector<double>& relevance) {
    std::vector<std::size_t> order(relevance.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return relevance[a] > relevance[b]; });
    return order;
}

Trajectory perturbation_curve(const CompiledModel& model, const Tensor& input, int class_index, const Tensor& e,
                              double step_fraction, double fill, bool insertion) {
    if (!(step_fraction > 0.0 && step_fraction <= 1.0)) throw MetricError("step fraction must be in (0, 1]");
    if (input.shape() != model.network.input_shape()) throw MetricError("input does not match the model");
    if (e.h() != input.h() || e.w() != input.w() || (e.c() != 1 && e.c() != input.c())) {
        throw MetricError("explanation shape " + to_string(e.shape()) + " does not fit input " +
                          to_string(input.shape()));
    }
    const std::size_t group = e.c() == 1 ? input.c() : 1;
    std::vector<double> relevance(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) relevance[i] = std::abs(e[i]);
    const auto order = ranking(relevance);
    const std::size_t n = order.size();
    const auto step = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(step_fraction * n - 1e-9)));

    Tensor x = insertion ? Tensor(input.shape(), fill) : input;
    const auto c = static_cast<std::size_t>(class_index);
    Trajectory t;
    t.fraction.push_back(0.0);
    t.score.push_back(class_score(model.network, x, c));
    for (std::size_t done = 0; done < n;) {
        const std::size_t end = std::min(n, done + step);
        for (std::size_t k = done; k < end; ++k) {
            for (std::size_t j = 0; j < group; ++j) {
                const std::size_t idx = order[k] * group + j;
                x[idx] = insertion ? input[idx] : fill;
            }
        }
        done = end;
        t.fraction.push_back(static_cast<double>(done) / static_cast<double>(n));
        t.score.push_back(class_score(model.network, x, c));
    }
    t.auc = trapezoid_auc(t.fraction, t.score);
    return t;
}

}  // namespace

std::string to_string(Mode m) {
    switch (m) {
        case Mode::NotEqual: return "!=";
        case Mode::Greater: return ">";
        case Mode::Less: return "<";
    }
    return "?";
}

const std::vector<Mode>& all_modes() {
    static const std::vector<Mode> modes{Mode::NotEqual, Mode::Greater, Mode::Less};
    return modes;
}

bool selects(Mode m, double v) {
    switch (m) {
        case Mode::NotEqual: return v != 0.0;
        case Mode::Greater: return v > 0.0;
        case Mode::Less: return v < 0.0;
    }
    return false;
}

double element_error(double e, double gt, Mode m) {
    if (m == Mode::NotEqual) return std::abs(std::abs(e) - std::abs(gt));
    return std::min(std::abs(e - gt), 1.0);
}

SuiteScores suite(const Tensor& e, const Tensor& gt, Mode m) {
    check_shapes(e, gt);
    double err_sum = 0.0;
    std::size_t support = 0;
    double tp = 0.0, fp = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        const bool in_gt = selects(m, gt[i]);
        const bool in_e = selects(m, e[i]);
        if (!in_gt && !in_e) continue;
        const double f = element_error(e[i], gt[i], m);
        if (in_gt) {
            err_sum += f;
            ++support;
            if (in_e) tp += 1.0 - f;
        } else {
            fp += f;
        }
    }
    SuiteScores s;
    s.cpl = support == 0 ? 1.0 : 1.0 - err_sum / static_cast<double>(support);
    s.cpa = (tp == 0.0 && fp == 0.0) ? 1.0 : tp / (tp + fp);
    s.cor = 0.5 * (s.cpl + s.cpa);
    return s;
}

double completeness(const Tensor& e, const Tensor& gt, Mode m) { return suite(e, gt, m).cpl; }
double compactness(const Tensor& e, const Tensor& gt, Mode m) { return suite(e, gt, m).cpa; }
double correctness(const Tensor& e, const Tensor& gt, Mode m) { return suite(e, gt, m).cor; }
double correctness_ns(const Tensor& e, const Tensor& gt) { return correctness(e, gt, Mode::NotEqual); }
double correctness_s(const Tensor& e, const Tensor& gt) {
    return 0.5 * (correctness(e, gt, Mode::Greater) + correctness(e, gt, Mode::Less));
}

double concept_level(double (*metric)(const Tensor&, const Tensor&, Mode), const std::vector<Tensor>& e,
                     const std::vector<Tensor>& gt, Mode m) {
    if (e.size() != gt.size()) throw MetricError("explanation and GT concept counts differ");
    if (e.empty()) throw MetricError("no concepts to average over");
    double sum = 0.0;
    for (std::size_t k = 0; k < e.size(); ++k) sum += metric(e[k], gt[k], m);
    return sum / static_cast<double>(e.size());
}

double mae(const Tensor& e, const Tensor& gt) {
    check_shapes(e, gt);
    double s = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) s += std::abs(e[i] - gt[i]);
    return s / static_cast<double>(e.size());
}

double cosine_similarity(const Tensor& e, const Tensor& gt) {
    check_shapes(e, gt);
    double dot = 0.0, ne = 0.0, ng = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double a = std::abs(e[i]), b = std::abs(gt[i]);
        dot += a * b;
        ne += a * a;
        ng += b * b;
    }
    if (ne == 0.0 || ng == 0.0) return 0.0;
    return dot / (std::sqrt(ne) * std::sqrt(ng));
}

BinaryScores binary_scores(const Tensor& e, const Tensor& gt, double tau) {
    check_shapes(e, gt);
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        const bool g = gt[i] != 0.0;
        const bool b = std::abs(e[i]) > tau;
        tp += g && b;
        fp += !g && b;
        fn += g && !b;
    }
    auto ratio = [](double a, double b) { return b == 0.0 ? 0.0 : a / b; };
    BinaryScores s;
    s.precision = ratio(static_cast<double>(tp), static_cast<double>(tp + fp));
    s.recall = ratio(static_cast<double>(tp), static_cast<double>(tp + fn));
    s.f1 = ratio(2.0 * s.precision * s.recall, s.precision + s.recall);
    s.iou = ratio(static_cast<double>(tp), static_cast<double>(tp + fp + fn));
    return s;
}

double ebpg(const Tensor& e, const Tensor& gt) {
    check_shapes(e, gt);
    double inside = 0.0, total = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double a = std::abs(e[i]);
        total += a;
        if (gt[i] != 0.0) inside += a;
    }
    return total == 0.0 ? 0.0 : inside / total;
}

double rra(const Tensor& e, const Tensor& gt) {
    check_shapes(e, gt);
    std::vector<double> relevance(e.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        relevance[i] = std::abs(e[i]);
        k += gt[i] != 0.0;
    }
    if (k == 0) return 0.0;
    const auto order = ranking(relevance);
    std::size_t hits = 0;
    for (std::size_t r = 0; r < k; ++r) hits += gt[order[r]] != 0.0;
    return static_cast<double>(hits) / static_cast<double>(k);
}

double pointing_game(const Tensor& e, const Tensor& gt) {
    check_shapes(e, gt);
    std::size_t best = 0;
    double best_v = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (std::abs(e[i]) > best_v) {
            best_v = std::abs(e[i]);
            best = i;
        }
    }
    if (best_v == 0.0) return 0.0;
    return gt[best] != 0.0 ? 1.0 : 0.0;
}

double trapezoid_auc(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw MetricError("trajectory axes differ in length");
    double auc = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) auc += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return auc;
}

Trajectory deletion_curve(const CompiledModel& model, const Tensor& input, int class_index, const Tensor& e,
                          double step_fraction, double fill) {
    return perturbation_curve(model, input, class_index, e, step_fraction, fill, false);
}

Trajectory insertion_curve(const CompiledModel& model, const Tensor& input, int class_index, const Tensor& e,
                           double step_fraction, double fill) {
    return perturbation_curve(model, input, class_index, e, step_fraction, fill, true);
}

std::map<std::string, double> time_metric(const std::vector<EvalRecord>& records) {
    std::map<std::string, std::pair<double, std::size_t>> acc;
    for (const auto& r : records) {
        auto& a = acc[r.method];
        a.first += r.elapsed_ms;
        ++a.second;
    }
    std::map<std::string, double> out;
    for (const auto& [m, a] : acc) out[m] = a.first / static_cast<double>(a.second);
    return out;
}

const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names{
        "Del",   "Ins",    "COS",    "F1",   "MAE",   "IoU",   "EBPG",  "RRA",   "PG",    "cor!=", "cor>",
        "cor<",  "cor_ns", "cor_s",  "PR",   "RE",    "cpa!=", "cpl!=", "cpa>",  "cpl>",  "cpa<",  "cpl<"};
    return names;
}

bool metric_needs_model(const std::string& name) { return name == "Del" || name == "Ins"; }

double compute_metric(const std::string& name, const MetricContext& ctx) {
    const Tensor& e = ctx.e;
    const Tensor& gt = ctx.gt;
    if (metric_needs_model(name)) {
        if (ctx.model == nullptr || ctx.input == nullptr) throw MetricError(name + " needs the model and input");
        return name == "Del" ? deletion_curve(*ctx.model, *ctx.input, ctx.class_index, e).auc
                             : insertion_curve(*ctx.model, *ctx.input, ctx.class_index, e).auc;
    }
    if (name == "COS") return cosine_similarity(e, gt);
    if (name == "MAE") return mae(e, gt);
    if (name == "EBPG") return ebpg(e, gt);
    if (name == "RRA") return rra(e, gt);
    if (name == "PG") return pointing_game(e, gt);
    if (name == "F1") return binary_scores(e, gt).f1;
    if (name == "PR") return binary_scores(e, gt).precision;
    if (name == "RE") return binary_scores(e, gt).recall;
    if (name == "IoU") return binary_scores(e, gt).iou;
    if (name == "cor_ns") return correctness_ns(e, gt);
    if (name == "cor_s") return correctness_s(e, gt);
    for (Mode m : all_modes()) {
        const std::string tag = to_string(m);
        if (name == "cpa" + tag) return compactness(e, gt, m);
        if (name == "cpl" + tag) return completeness(e, gt, m);
        if (name == "cor" + tag) return correctness(e, gt, m);
    }
    throw MetricError("unknown metric '" + name + "'");
}

std::map<std::string, double> evaluate_metrics(const Tensor& e, const Tensor& gt, const CompiledModel& model,
                                               const Tensor& input, int class_index) {
    check_shapes(e, gt);
    std::map<std::string, double> out;
    out["Del"] = deletion_curve(model, input, class_index, e).auc;
    out["Ins"] = insertion_curve(model, input, class_index, e).auc;
    out["COS"] = cosine_similarity(e, gt);
    const auto b = binary_scores(e, gt);
    out["F1"] = b.f1;
    out["PR"] = b.precision;
    out["RE"] = b.recall;
    out["IoU"] = b.iou;
    out["MAE"] = mae(e, gt);
    out["EBPG"] = ebpg(e, gt);
    out["RRA"] = rra(e, gt);
    out["PG"] = pointing_game(e, gt);
    for (Mode m : all_modes()) {
        const auto s = suite(e, gt, m);
        const std::string tag = to_string(m);
        out["cpa" + tag] = s.cpa;
        out["cpl" + tag] = s.cpl;
        out["cor" + tag] = s.cor;
    }
    out["cor_ns"] = out["cor!="];
    out["cor_s"] = 0.5 * (out["cor>"] + out["cor<"]);
    return out;
}

}  // namespace xaib
