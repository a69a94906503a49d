#pragma once

#include "tracecast/checkpoint.hpp"
#include "tracecast/dataset.hpp"
#include "tracecast/tape.hpp"
#include "tracecast/tensor.hpp"
#include "tracecast/training.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace tracecast {

struct NBeatsConfig {
    std::size_t num_stacks = 2;
    std::size_t blocks_per_stack = 2;  // applications per stack; weights shared
    std::size_t basis_dim = 4;
    std::size_t hidden_width = 128;
    std::size_t lookback = 0;
    std::size_t horizon = 0;
};

/**
 * The shared weights of one stack. A stack applies this block
 * `blocks_per_stack` times; every application reuses the same tensors.
 * Weight matrices are stored [in, out] so a row-vector batch multiplies from
 * the left.
 */
struct NBeatsBlock {
    std::vector<Tensor> fc_w;  // 4 layers: [L,width] then 3x [width,width]
    std::vector<Tensor> fc_b;  // 4 biases [width]
    Tensor theta_b;            // [width, basis] no bias
    Tensor theta_f;            // [width, basis] no bias
    Tensor back_w;             // [basis, L]
    Tensor back_b;             // [L]
    Tensor fore_w;             // [basis, H]
    Tensor fore_b;             // [H]
};

/// Univariate residual forecaster: each block application consumes the
/// running backcast residual and contributes to the summed forecast.
struct NBeatsModel {
    NBeatsConfig config;
    std::uint64_t seed = 0;
    std::vector<NBeatsBlock> stacks;
};

/// Seeded uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) initialization.
NBeatsModel build_nbeats(const NBeatsConfig& config, std::uint64_t seed);

/// Closed-form trainable parameter count for a config.
std::size_t nbeats_parameter_count(const NBeatsConfig& config);
std::size_t count_parameters(const NBeatsModel& model);

/// Stable (name, tensor) order used for optimization and checkpoints.
std::vector<std::pair<std::string, Tensor*>> named_parameters(NBeatsModel& model);

/// Tape wiring of a forward pass over an x batch of shape [B, L].
struct NBeatsForward {
    Tape::NodeId forecast = -1;  // [B, H]
    Tape::NodeId residual = -1;  // [B, L] after the last backcast
    std::vector<Tape::NodeId> backcasts;  // one per block application
    std::vector<Tape::NodeId> params;
};
NBeatsForward nbeats_forward(Tape& tape, const NBeatsModel& model, const Tensor& x);

/// Inference convenience: (forecast [B,H], residual [B,L]).
std::pair<Tensor, Tensor> nbeats_predict(const NBeatsModel& model, const Tensor& x);

/**
 * Train one independent model per variable of the window batch. Variable d
 * trains with seed `seed + d` for its init and shuffle stream. Numeric
 * failures carry the variable name. Returns models in variable order along
 * with their training histories.
 */
struct PerVariableTraining {
    std::vector<NBeatsModel> models;
    std::vector<TrainResult> results;
};
PerVariableTraining train_per_variable(const WindowBatch& train, const WindowBatch& val,
                                       const std::vector<std::string>& variable_names,
                                       NBeatsConfig config, const TrainOptions& options,
                                       std::uint64_t seed);

/// Pull variable d out of a [B, D, K] batch tensor as [B, K].
Tensor select_variable(const Tensor& batch, std::size_t variable);

Checkpoint to_checkpoint(const NBeatsModel& model);
NBeatsModel nbeats_from_checkpoint(const Checkpoint& ckpt);

} // namespace tracecast
