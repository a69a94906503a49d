#pragma once

#include "tracecast/tensor.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace tracecast {

/**
 * Raw multi-step forecasts keyed by origin. The forecast stored for origin t
 * covers time points t .. t+H-1 (lead 1..H), so consecutive origins overlap
 * and each covered time point accumulates up to H independent estimates.
 */
struct ForecastSet {
    std::size_t horizon = 0;
    std::size_t variable_count = 0;
    std::vector<std::size_t> origins;  // ascending
    std::vector<Tensor> forecasts;     // one [D, H] matrix per origin
};

/// Per-time-point mean forecasts. Row r of `estimates` is the D-vector
/// estimate for time `start + r`; `coverage[r]` counts contributing leads.
struct AggregatedForecast {
    std::size_t start = 0;
    Tensor estimates;  // [T, D]
    std::vector<std::size_t> coverage;
};

/// Assemble a ForecastSet from windowize() origins and a batched [B, D, H]
/// model output.
ForecastSet make_forecast_set(const std::vector<std::size_t>& origins,
                              const Tensor& forecasts);

/// Uniform average over every forecast available for each covered time point.
AggregatedForecast aggregate(const ForecastSet& fs);

/// Batched forecaster: [B, D, L] inputs to [B, D, H] forecasts.
using ForecastFn = std::function<Tensor(const Tensor&)>;

/**
 * Expected-behaviour estimate built from the training rows: the forecast +
 * aggregate pipeline runs over each training run separately and the two
 * runs' estimates are averaged at equal in-run offsets. Valid because all
 * runs share one recipe and run length.
 */
AggregatedForecast reference_forecast(const ForecastFn& model, const Tensor& train_rows,
                                      std::size_t run_length, std::size_t lookback,
                                      std::size_t horizon);

struct DetectionRow {
    std::size_t time = 0;  // in-run coordinate of the test run
    double score = 0.0;
    bool flag = false;
    bool label = false;
    std::size_t argmax_variable = 0;  // largest deviation, lower index on ties
    std::vector<double> deviations;   // |test - reference| per variable
};

struct Metrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct DetectionReport {
    std::vector<DetectionRow> rows;
    Metrics metrics;
    std::size_t top_b = 1;
    double threshold = 0.1;
};

/**
 * Deviation scoring: e_d(t) = |test_d(t) - ref_d(t)|, s(t) = mean of the
 * top_b largest deviations, flag where s(t) > threshold. The two estimates
 * must cover the same range.
 */
std::vector<DetectionRow> score(const AggregatedForecast& test,
                                const AggregatedForecast& reference,
                                std::size_t top_b, double threshold);

/// Point-wise precision/recall/F1 with the zero-denominator convention
/// P=0 / R=0 / F1=0. `labels` is the global per-time label of the test run,
/// indexed by in-run time; each row's label field is filled in.
Metrics evaluate(std::vector<DetectionRow>& rows, const std::vector<char>& labels);

/// Mean over origins of the squared L2 norm of the flattened error.
double mse_loss(const Tensor& forecasts, const Tensor& targets);

/// CSV: time, score, flag, label, argmax_variable, dev_<name>...
void write_report_csv(const DetectionReport& report,
                      const std::vector<std::string>& variable_names,
                      const std::string& path);

/// Summary JSON with metrics, scoring settings and window geometry.
void write_summary_json(const DetectionReport& report, std::size_t lookback,
                        std::size_t horizon, const std::string& path);

/**
 * Plot data for external rendering: per variable a CSV with time, truth,
 * test estimate, reference estimate and flag, plus flag_spans.csv listing
 * [start, end) runs of consecutive flags. Files land in `dir`, which must
 * already exist.
 */
void write_plot_data(const AggregatedForecast& test, const AggregatedForecast& reference,
                     const Tensor& truth_rows, const DetectionReport& report,
                     const std::vector<std::string>& variable_names,
                     const std::string& dir);

} // namespace tracecast
