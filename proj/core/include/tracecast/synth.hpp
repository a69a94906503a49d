#pragma once

#include "tracecast/dataset.hpp"
#include "tracecast/tensor.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace tracecast {

/// Behavioural classes a synthetic sensor variable can follow.
enum class SignalClass { StepLike, SmoothNoisy, Idle };

const char* signal_class_name(SignalClass c);

struct VariableSpec {
    std::string name;
    SignalClass signal_class = SignalClass::StepLike;
};

/**
 * Deterministic recipe for one synthetic multivariate trace. The same
 * per-variable schedule repeats every run; `jitter` allows a small random
 * per-run phase offset, and smooth variables get fresh noise each run.
 */
struct RecipeSpec {
    std::uint64_t seed = 42;
    std::vector<VariableSpec> variables;
    std::size_t samples_per_run = 500;
    std::size_t run_count = 3;
    double noise_sigma = 0.01;   // smooth_noisy only
    std::size_t jitter = 0;      // max per-run phase offset, samples
    double sample_interval_s = 0.1;
};

enum class AnomalyCategory { AmplitudeShift, TimeShift, StepShift };

const char* anomaly_category_name(AnomalyCategory c);

/**
 * One induced anomaly on a step-like variable of the test run. The segment
 * [segment_begin, segment_end) is in test-run coordinates. Exactly one of
 * the three magnitude fields is meaningful, selected by `category`.
 */
struct AnomalySpec {
    std::string target_variable;
    AnomalyCategory category = AnomalyCategory::AmplitudeShift;
    std::size_t segment_begin = 0;
    std::size_t segment_end = 0;
    double amplitude_delta = 0.0;  // amplitude_shift: added inside the segment
    long lag = 0;                  // time_shift: samples, >0 delays the signal
    long edge_displacement = 0;    // step_shift: samples, >0 moves the edge later
    double label_epsilon = 1e-6;
    double edge_threshold = 0.1;   // step detection level for step_shift
};

struct InjectionSummary {
    std::string variable;
    AnomalyCategory category;
    double anomaly_ratio = 0.0;  // labeled fraction of the variable's test run
};

/// A trace plus ground-truth anomaly labels (same shape, values in {0,1}).
struct LabeledTrace {
    Trace trace;
    Tensor labels;
    std::vector<InjectionSummary> injections;
};

/// Table-style summary of one labeled dataset.
struct DatasetDescriptor {
    std::size_t variable_count = 0;
    std::size_t attacked_count = 0;
    std::string categories;      // unique names joined with " + ", "" if clean
    double anomaly_ratio = 0.0;  // fraction of test-run samples anomalous in any variable
    std::vector<std::pair<std::string, double>> per_variable;  // attacked only
};

/// Produce the recipe's trace; identical seeds give identical traces.
Trace generate(const RecipeSpec& spec);

/// Wrap a clean trace with all-zero labels.
LabeledTrace make_labeled(Trace trace);

/**
 * Apply one anomaly to the test run (the final run) of `base`. The recipe is
 * consulted to reject targets that are not step-like. Labels are set where
 * the modified column departs from the input column by more than
 * label_epsilon, OR-ed with any labels already present.
 */
LabeledTrace inject(const LabeledTrace& base, const AnomalySpec& spec,
                    const RecipeSpec& recipe);

DatasetDescriptor describe(const LabeledTrace& labeled);

/// Indices i >= 1 where |column[i] - column[i-1]| > threshold.
std::vector<std::size_t> detect_edges(const std::vector<double>& column,
                                      double threshold);

} // namespace tracecast
