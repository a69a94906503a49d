#pragma once

#include "tracecast/optimizer.hpp"
#include "tracecast/tensor.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace tracecast {

struct TrainOptions {
    std::size_t max_epochs = 1000;
    std::size_t early_stop_patience = 100;
    std::size_t batch_size = 32;
    double lr = 0.001;
    double plateau_factor = 0.5;
    int plateau_patience = 5;
};

struct TrainResult {
    std::vector<double> val_history;  // one entry per completed epoch
    std::size_t epochs_run = 0;
    double best_val = std::numeric_limits<double>::infinity();
    double final_train_loss = std::numeric_limits<double>::infinity();
};

/**
 * Model-specific half of the training loop. A driver owns its parameters and
 * optimizer state; `fit` drives epochs, shuffling, batching, validation,
 * the plateau schedule and early stopping.
 */
class FitDriver {
public:
    virtual ~FitDriver() = default;

    /// Called before each epoch's batches (e.g. to rebuild a graph).
    virtual void epoch_start(std::size_t /*epoch*/) {}

    /// Forward + backward + parameter update on one batch; returns the mean
    /// squared error summed over the target window, averaged over the batch.
    virtual double train_step(const Tensor& x, const Tensor& y) = 0;

    /// Loss only, no updates.
    virtual double eval_loss(const Tensor& x, const Tensor& y) = 0;

    virtual OptimizerState& optimizer() = 0;
};

/**
 * Standard loop: per epoch, shuffle the training windows, take batches of
 * `batch_size`, then score the validation set and update the plateau
 * schedule. Stops at `max_epochs` or when the best validation loss is more
 * than `early_stop_patience` epochs old. With an empty validation set the
 * epoch's training loss stands in for the validation loss.
 *
 * x/y tensors are indexed along dimension 0. Numeric failures inside a batch
 * are rethrown with the epoch and batch index attached.
 */
TrainResult fit(FitDriver& driver, const Tensor& train_x, const Tensor& train_y,
                const Tensor& val_x, const Tensor& val_y, const TrainOptions& options,
                std::uint64_t shuffle_seed);

/// Copy the dimension-0 slices named by `idx` into a new tensor, in order.
Tensor gather_rows(const Tensor& t, const std::vector<std::size_t>& idx);

} // namespace tracecast
