#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "xaib/compiler.hpp"
#include "xaib/tensor.hpp"

namespace xaib {

// Pixel-set selector: GT != 0, GT > 0 or GT < 0 (and likewise for E).
enum class Mode { NotEqual, Greater, Less };

std::string to_string(Mode m);
const std::vector<Mode>& all_modes();

class MetricError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline constexpr double kBinarizeThreshold = 0.25;
inline constexpr double kDeletionStepFraction = 0.02;

bool selects(Mode m, double v);
// Per-element error: ||e| - |gt|| for NotEqual, min(|e - gt|, 1) otherwise.
double element_error(double e, double gt, Mode m);

double completeness(const Tensor& e, const Tensor& gt, Mode m);
double compactness(const Tensor& e, const Tensor& gt, Mode m);
double correctness(const Tensor& e, const Tensor& gt, Mode m);
double correctness_ns(const Tensor& e, const Tensor& gt);
double correctness_s(const Tensor& e, const Tensor& gt);

struct SuiteScores {
    double cpl = 1.0;
    double cpa = 1.0;
    double cor = 1.0;
};
// Completeness, compactness and correctness from a single pass.
SuiteScores suite(const Tensor& e, const Tensor& gt, Mode m);

// Mean of `metric` over per-concept explanation/GT pairs.
double concept_level(double (*metric)(const Tensor&, const Tensor&, Mode), const std::vector<Tensor>& e,
                     const std::vector<Tensor>& gt, Mode m);

double mae(const Tensor& e, const Tensor& gt);
double cosine_similarity(const Tensor& e, const Tensor& gt);

struct BinaryScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double iou = 0.0;
};
// GT binarized as GT != 0, E as |E| > tau.
BinaryScores binary_scores(const Tensor& e, const Tensor& gt, double tau = kBinarizeThreshold);

double ebpg(const Tensor& e, const Tensor& gt);
double rra(const Tensor& e, const Tensor& gt);
// 1 if argmax |E| lies in the GT mask, else 0 (an all-zero E misses).
double pointing_game(const Tensor& e, const Tensor& gt);

// Score trajectory while removing (deletion) or adding (insertion) the most
// relevant units first. A 2D explanation ranks pixels (all channels move
// together); a 3D one ranks individual elements.
struct Trajectory {
    std::vector<double> fraction;
    std::vector<double> score;
    double auc = 0.0;
};
Trajectory deletion_curve(const CompiledModel& model, const Tensor& input, int class_index, const Tensor& e,
                          double step_fraction = kDeletionStepFraction, double fill = 0.0);
Trajectory insertion_curve(const CompiledModel& model, const Tensor& input, int class_index, const Tensor& e,
                           double step_fraction = kDeletionStepFraction, double fill = 0.0);
double trapezoid_auc(const std::vector<double>& x, const std::vector<double>& y);

struct EvalRecord {
    std::string method;
    std::string example_id;
    std::string metric;
    double value = 0.0;
    double elapsed_ms = 0.0;
};

// Mean elapsed_ms per method.
std::map<std::string, double> time_metric(const std::vector<EvalRecord>& records);

// Metric rows in report order.
const std::vector<std::string>& metric_names();
bool metric_needs_model(const std::string& name);

struct MetricContext {
    const Tensor& e;
    const Tensor& gt;
    const CompiledModel* model = nullptr;  // Del/Ins only
    const Tensor* input = nullptr;         // Del/Ins only
    int class_index = 0;
};

// One metric by its report name; MetricError for unknown names or a missing model.
double compute_metric(const std::string& name, const MetricContext& ctx);

// Every metric in metric_names() for one explanation. `e` and `gt` must have
// the same shape; the model and input are used by Del/Ins.
std::map<std::string, double> evaluate_metrics(const Tensor& e, const Tensor& gt, const CompiledModel& model,
                                               const Tensor& input, int class_index);

}  // namespace xaib
