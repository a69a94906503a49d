#pragma once

#include "tracecast/tensor.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace tracecast {

/// A multivariate trace of `run_count` back-to-back process runs, one row per
/// time sample and one column per sensor variable.
struct Trace {
    Tensor values;  // [M, D] with M = run_count * run_length
    std::vector<std::string> variable_names;
    double sample_interval_s = 0.1;
    std::size_t run_length = 0;  // samples per run
    std::size_t run_count = 0;

    std::size_t rows() const { return values.dim(0); }
    std::size_t variables() const { return values.dim(1); }
};

/// Per-variable min/max observed on the fitting rows.
struct NormalizationRecord {
    std::vector<double> min;
    std::vector<double> max;
};

/**
 * Lookback/horizon window pairs cut from a row matrix.
 *
 * Origin t counts the rows before the first forecast row, so window b covers
 * input rows [t-L, t) and target rows [t, t+H) of the source matrix. Valid
 * origins run from L through M'-H inclusive for an M'-row source.
 */
struct WindowBatch {
    Tensor inputs;   // [B, D, L]
    Tensor targets;  // [B, D, H]
    std::vector<std::size_t> origins;

    std::size_t count() const { return origins.size(); }
    std::size_t lookback() const { return inputs.ndim() == 3 ? inputs.dim(2) : 0; }
    std::size_t horizon() const { return targets.ndim() == 3 ? targets.dim(2) : 0; }
};

/**
 * Read a trace CSV: mandatory header, first column `time` in seconds, one
 * column per variable after that. The row count must divide evenly into
 * `expected_runs` runs. Throws DataError on format problems, naming the
 * offending row and column.
 */
Trace load_trace(const std::string& path, std::size_t expected_runs);

/// Write a trace in the same CSV dialect load_trace reads. Deterministic:
/// shortest round-trip number formatting, '\n' line ends.
void save_trace(const Trace& trace, const std::string& path);

/**
 * Min-max normalize every variable using statistics from the first
 * `fit_row_count` rows only. Variables that are constant on those rows map
 * to 0 everywhere. Rows past the fitted range may land outside [0,1]; they
 * are not clamped here.
 */
std::pair<Trace, NormalizationRecord> fit_normalize(const Trace& trace,
                                                    std::size_t fit_row_count);

/// Invert the affine map for non-degenerate variables; constant variables
/// come back at their fitted minimum.
Tensor denormalize(const Tensor& values, const NormalizationRecord& record);

/// Partition a 3-run trace into its training rows (first two runs) and test
/// rows (last run). Throws DataError for any other run count.
std::pair<Tensor, Tensor> split(const Trace& trace);

/// Cut all M'-L-H+1 window pairs from an [M', D] matrix.
WindowBatch windowize(const Tensor& rows, std::size_t lookback, std::size_t horizon);

/// Split off round(fraction * B) windows, sampled without replacement with
/// the given seed, as a validation set. Both halves keep ascending origin
/// order. Returns (train, validation).
std::pair<WindowBatch, WindowBatch> validation_sample(const WindowBatch& batch,
                                                      double fraction,
                                                      std::uint64_t seed);

} // namespace tracecast
