#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "xaib/metrics.hpp"
#include "xaib/nn.hpp"

// Element-by-element restatements of the metric definitions, kept apart from
// the production code so the two can be compared.
namespace xaib::oracle {

inline bool in_set(double v, Mode m) {
    if (m == Mode::NotEqual) return v != 0.0;
    if (m == Mode::Greater) return v > 0.0;
    return v < 0.0;
}

inline double f(double e, double g, Mode m) {
    if (m == Mode::NotEqual) return std::fabs(std::fabs(e) - std::fabs(g));
    const double d = std::fabs(e - g);
    return d > 1.0 ? 1.0 : d;
}

inline double cpl(const Tensor& e, const Tensor& g, Mode m) {
    double total = 0.0;
    int count = 0;
    for (std::size_t p = 0; p < g.size(); ++p) {
        if (!in_set(g[p], m)) continue;
        total += f(e[p], g[p], m);
        count += 1;
    }
    if (count == 0) return 1.0;
    return 1.0 - total / count;
}

inline double cpa(const Tensor& e, const Tensor& g, Mode m) {
    double tp_acc = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
        if (in_set(g[p], m) && in_set(e[p], m)) tp_acc += 1.0 - f(e[p], g[p], m);
    }
    double fp_err = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
        if (!in_set(g[p], m) && in_set(e[p], m)) fp_err += f(e[p], g[p], m);
    }
    if (tp_acc == 0.0 && fp_err == 0.0) return 1.0;
    if (tp_acc == 0.0) return 0.0;
    return tp_acc / (tp_acc + fp_err);
}

inline double cor(const Tensor& e, const Tensor& g, Mode m) { return (cpl(e, g, m) + cpa(e, g, m)) / 2.0; }

inline double mae(const Tensor& e, const Tensor& g) {
    double s = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) s += std::fabs(e[p] - g[p]);
    return s / static_cast<double>(g.size());
}

inline double cos(const Tensor& e, const Tensor& g) {
    double dot = 0.0, ee = 0.0, gg = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
        dot += std::fabs(e[p]) * std::fabs(g[p]);
        ee += e[p] * e[p];
        gg += g[p] * g[p];
    }
    if (ee == 0.0 || gg == 0.0) return 0.0;
    return dot / (std::sqrt(ee) * std::sqrt(gg));
}

struct Confusion {
    double tp = 0, fp = 0, fn = 0;
};

inline Confusion confusion(const Tensor& e, const Tensor& g, double tau) {
    Confusion c;
    for (std::size_t p = 0; p < g.size(); ++p) {
        const bool truth = g[p] != 0.0;
        const bool said = std::fabs(e[p]) > tau;
        if (truth && said) c.tp += 1;
        if (!truth && said) c.fp += 1;
        if (truth && !said) c.fn += 1;
    }
    return c;
}

inline double precision(const Tensor& e, const Tensor& g, double tau = kBinarizeThreshold) {
    const Confusion c = confusion(e, g, tau);
    return c.tp + c.fp == 0 ? 0.0 : c.tp / (c.tp + c.fp);
}
inline double recall(const Tensor& e, const Tensor& g, double tau = kBinarizeThreshold) {
    const Confusion c = confusion(e, g, tau);
    return c.tp + c.fn == 0 ? 0.0 : c.tp / (c.tp + c.fn);
}
inline double f1(const Tensor& e, const Tensor& g) {
    const double p = precision(e, g), r = recall(e, g);
    return p + r == 0 ? 0.0 : 2 * p * r / (p + r);
}
inline double iou(const Tensor& e, const Tensor& g) {
    const Confusion c = confusion(e, g, kBinarizeThreshold);
    return c.tp + c.fp + c.fn == 0 ? 0.0 : c.tp / (c.tp + c.fp + c.fn);
}

inline double ebpg(const Tensor& e, const Tensor& g) {
    double in = 0.0, all = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
        all += std::fabs(e[p]);
        if (g[p] != 0.0) in += std::fabs(e[p]);
    }
    return all == 0.0 ? 0.0 : in / all;
}

// Units by decreasing |E|, equal values in index order, by repeated selection.
inline std::vector<std::size_t> order_by_relevance(const Tensor& e) {
    std::vector<bool> taken(e.size(), false);
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < e.size(); ++r) {
        std::size_t best = e.size();
        for (std::size_t p = 0; p < e.size(); ++p) {
            if (taken[p]) continue;
            if (best == e.size() || std::fabs(e[p]) > std::fabs(e[best])) best = p;
        }
        taken[best] = true;
        out.push_back(best);
    }
    return out;
}

inline double rra(const Tensor& e, const Tensor& g) {
    std::size_t k = 0;
    for (std::size_t p = 0; p < g.size(); ++p) k += g[p] != 0.0;
    if (k == 0) return 0.0;
    const auto order = order_by_relevance(e);
    double hits = 0;
    for (std::size_t r = 0; r < k; ++r) hits += g[order[r]] != 0.0;
    return hits / static_cast<double>(k);
}

inline double pg(const Tensor& e, const Tensor& g) {
    std::size_t best = 0;
    for (std::size_t p = 1; p < e.size(); ++p) {
        if (std::fabs(e[p]) > std::fabs(e[best])) best = p;
    }
    if (e[best] == 0.0) return 0.0;
    return g[best] != 0.0 ? 1.0 : 0.0;
}

// Perturbation AUC with pixels grouped when E has one channel.
inline double perturbation_auc(const Network& net, const Tensor& input, std::size_t cls, const Tensor& e,
                               double step_fraction, bool insertion) {
    const std::size_t group = e.c() == 1 ? input.c() : 1;
    const auto order = order_by_relevance(e);
    const std::size_t n = order.size();
    std::size_t step = static_cast<std::size_t>(std::ceil(step_fraction * static_cast<double>(n) - 1e-9));
    if (step == 0) step = 1;
    Tensor x = insertion ? Tensor(input.shape()) : input;
    std::vector<double> xs{0.0}, ys{class_score(net, x, cls)};
    std::size_t done = 0;
    while (done < n) {
        for (std::size_t k = done; k < done + step && k < n; ++k) {
            for (std::size_t j = 0; j < group; ++j) {
                const std::size_t i = order[k] * group + j;
                x[i] = insertion ? input[i] : 0.0;
            }
        }
        done = done + step < n ? done + step : n;
        xs.push_back(static_cast<double>(done) / static_cast<double>(n));
        ys.push_back(class_score(net, x, cls));
    }
    double auc = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i) auc += (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]) / 2.0;
    return auc;
}

// Every model-free metric by report name.
inline std::map<std::string, double> model_free(const Tensor& e, const Tensor& g) {
    std::map<std::string, double> out;
    out["COS"] = oracle::cos(e, g);
    out["F1"] = oracle::f1(e, g);
    out["MAE"] = oracle::mae(e, g);
    out["IoU"] = oracle::iou(e, g);
    out["EBPG"] = oracle::ebpg(e, g);
    out["RRA"] = oracle::rra(e, g);
    out["PG"] = oracle::pg(e, g);
    out["PR"] = oracle::precision(e, g);
    out["RE"] = oracle::recall(e, g);
    for (Mode m : {Mode::NotEqual, Mode::Greater, Mode::Less}) {
        const std::string tag = m == Mode::NotEqual ? "!=" : (m == Mode::Greater ? ">" : "<");
        out["cpl" + tag] = oracle::cpl(e, g, m);
        out["cpa" + tag] = oracle::cpa(e, g, m);
        out["cor" + tag] = oracle::cor(e, g, m);
    }
    out["cor_ns"] = out["cor!="];
    out["cor_s"] = (out["cor>"] + out["cor<"]) / 2.0;
    return out;
}

}  // namespace xaib::oracle
