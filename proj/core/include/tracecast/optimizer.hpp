#pragma once

#include "tracecast/tensor.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace tracecast {

/**
 * Adam state plus the learning-rate plateau bookkeeping, kept together so a
 * training loop can checkpoint or resume the whole thing as one value.
 */
struct OptimizerState {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::int64_t step = 0;
    std::vector<Tensor> m;  // first moments, one per parameter
    std::vector<Tensor> v;  // second moments

    double plateau_factor = 0.5;
    int plateau_patience = 5;
    int plateau_counter = 0;
    double best_val = std::numeric_limits<double>::infinity();
};

/// Zero-initialize moment accumulators shaped like the parameters.
OptimizerState make_optimizer_state(const std::vector<Tensor>& params, double lr);

/// One bias-corrected Adam update, in place. `names` (if provided) labels
/// parameters in error messages; otherwise indices are used.
void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads,
               OptimizerState& state, const std::vector<std::string>& names = {});

/// Same update through pointers, for parameters living inside a model struct.
void adam_step(const std::vector<Tensor*>& params,
               const std::vector<const Tensor*>& grads, OptimizerState& state,
               const std::vector<std::string>& names = {});

/// Track the best validation loss; halve lr after `plateau_patience`
/// consecutive calls without strict improvement, then restart the count.
void plateau_schedule(OptimizerState& state, double val_loss);

/// True once the best entry lies more than `patience` positions before the
/// end of the history.
bool early_stop(const std::vector<double>& history, std::size_t patience = 100);

} // namespace tracecast
