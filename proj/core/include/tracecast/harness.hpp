#pragma once

#include "tracecast/dataset.hpp"
#include "tracecast/detector.hpp"
#include "tracecast/graphnet.hpp"
#include "tracecast/nbeats.hpp"
#include "tracecast/run_config.hpp"
#include "tracecast/synth.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace tracecast {

/// One synthetic dataset of an experiment plan.
struct DatasetPlan {
    std::string name;
    RecipeSpec recipe;
    std::vector<AnomalySpec> anomalies;
};

/**
 * Everything run_sweep needs: datasets, the model family, the window grid,
 * the gnn top-k sweep, training/detection settings and the output root.
 * `workers` is accepted for interface stability; execution is serial (cells
 * are independent, so a parallel dispatcher could slot in without changes).
 */
struct ExperimentPlan {
    std::vector<DatasetPlan> datasets;
    ModelConfig model;
    std::vector<std::pair<std::size_t, std::size_t>> windows;
    std::vector<std::size_t> top_k_list = {1};  // gnn cells only
    TrainOptions training;
    DetectionConfig detection;
    std::uint64_t seed = 42;
    std::string out_dir = "./out";
    std::size_t workers = 1;
};

/// Single-dataset plan straight from a validated config document.
ExperimentPlan plan_from_config(const RunConfig& config);

struct ResultRow {
    std::string dataset;
    std::string model;  // "nbeats" or "gnn"
    std::size_t lookback = 0;
    std::size_t horizon = 0;
    std::size_t top_k = 0;  // 0 for nbeats rows
    bool ok = false;
    std::string error;
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double test_mse = 0.0;
    double train_wall_s = 0.0;
    double test_wall_s = 0.0;
    std::size_t param_count = 0;
    bool trained = false;  // false when every model came from the cache
};

struct ResultTable {
    std::vector<ResultRow> rows;
};

struct SweepOutcome {
    ResultTable table;
    std::size_t trained_cells = 0;
    std::size_t loaded_cells = 0;
    std::size_t failed_cells = 0;
};

/// Generate, normalize on the training rows, then apply the plan's
/// anomalies to the test run. Deterministic in the recipe seed.
LabeledTrace prepare_dataset(const DatasetPlan& plan);

/// trace.csv, labels.csv and descriptor.json under `dir` (created if needed).
void write_dataset_files(const LabeledTrace& labeled, const std::string& dir);

/// Per-time global anomaly flag of the test run: OR over variables.
std::vector<char> global_test_labels(const LabeledTrace& labeled);

/// Cache locations. N-BEATS keeps one file per variable; the gnn checkpoint
/// also encodes its top-k.
std::string nbeats_checkpoint_path(const std::string& out_dir, const std::string& dataset,
                                   std::size_t lookback, std::size_t horizon,
                                   const std::string& variable);
std::string gnn_checkpoint_path(const std::string& out_dir, const std::string& dataset,
                                std::size_t lookback, std::size_t horizon,
                                std::size_t top_k);

/// Output directory of one sweep cell:
/// <out>/<dataset>/<model>/<L>x<H>[/k<top_k>].
std::string cell_dir(const std::string& out_dir, const std::string& dataset,
                     const std::string& model, std::size_t lookback, std::size_t horizon,
                     std::size_t top_k);

/// Full cells run detection and write their bundles; TrainOnly stops after
/// the checkpoints are on disk and leaves existing result tables untouched.
enum class SweepMode { Full, TrainOnly };

/**
 * Train, forecast, detect and evaluate every cell of the plan. Checkpoints
 * found in the cache are reused instead of retrained (the cache trusts the
 * dataset name plus window, seed and shape; remove <out>/models after
 * changing a recipe under an existing name). Each finished cell writes its
 * detection bundle and refreshes results.csv/results.json, so interrupted
 * sweeps resume where they stopped. A failing cell records its error in the
 * table and the sweep continues. `on_cell`, when set, observes every
 * finished row.
 */
SweepOutcome run_sweep(const ExperimentPlan& plan, SweepMode mode = SweepMode::Full,
                       const std::function<void(const ResultRow&)>& on_cell = {});

void write_results_csv(const ResultTable& table, const std::string& path);
void write_results_json(const ResultTable& table, const std::string& path);

/// All metric columns except wall times and cache provenance, for
/// reproducibility comparisons across runs (timings are hardware noise).
std::string stable_table_serialization(const ResultTable& table);

struct AblationRow {
    std::size_t top_k = 0;
    std::size_t lookback = 0;
    std::size_t horizon = 0;
    double mean_f1 = 0.0;
    double mean_precision = 0.0;
    double mean_recall = 0.0;
    double mean_mse = 0.0;
    std::size_t count = 0;  // datasets contributing to the mean
};

/// Mean gnn metrics per (window, top_k) across datasets; failed cells are
/// excluded and the count column records the remaining coverage.
std::vector<AblationRow> ablation_summary(const ResultTable& table);
void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path);

/// Human-readable lines for windows where the sparsest graph (smallest
/// top_k) has a larger mean test MSE than the densest one; empty when the
/// expected ordering holds everywhere.
std::vector<std::string> ablation_discrepancies(const ResultTable& table);

struct ComplexityRow {
    std::size_t lookback = 0;
    std::size_t horizon = 0;
    std::size_t nbeats_per_variable = 0;
    std::size_t nbeats_total = 0;  // per-variable count times D
    std::size_t gnn_total = 0;
    double ratio = 0.0;  // nbeats per-variable over gnn total
};

std::vector<ComplexityRow> complexity_report(
    const std::vector<std::pair<std::size_t, std::size_t>>& windows,
    std::size_t variable_count, const ModelConfig& model);
void write_complexity_csv(const std::vector<ComplexityRow>& rows,
                          const std::string& path);

/// Recompute precision/recall/F1 from the flag and label columns of a
/// previously written report.csv.
Metrics metrics_from_report_csv(const std::string& path);

} // namespace tracecast
