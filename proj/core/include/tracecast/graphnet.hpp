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

struct GraphConfig {
    std::size_t embed_dim = 128;
    std::size_t top_k = 1;      // neighbors per node besides the self-loop
    std::size_t lookback = 0;
    std::size_t horizon = 0;
    std::size_t node_count = 0;  // D
    bool input_bias = true;      // bias on the shared input transform
    double leaky_slope = 0.2;    // attention nonlinearity
};

/// Embedding-derived graph: cosine similarities and the top-k adjacency.
struct SensorGraph {
    Tensor similarity;  // [D, D]
    Tensor adjacency;   // [D, D] binary, unit diagonal
};

/**
 * Multivariate forecaster over a learned sensor graph. Node embeddings V
 * define the graph; one attention layer mixes the per-node input features;
 * a head shared across nodes maps each node's gated feature to H steps.
 */
struct GraphModel {
    GraphConfig config;
    std::uint64_t seed = 0;
    Tensor V;       // [D, Emb] node embeddings
    Tensor W;       // [L, Emb] shared input transform, stored [in, out]
    Tensor W_b;     // [Emb] when input_bias, else empty
    Tensor attn;    // [4*Emb] attention vector over g_i ++ g_j
    Tensor head_w;  // [Emb, H]
    Tensor head_b;  // [H]
};

/// Embeddings start as row-normalized unit normals, so no row is zero-norm.
GraphModel build_graph_model(const GraphConfig& config, std::uint64_t seed);

std::size_t graph_parameter_count(const GraphConfig& config);
std::size_t count_parameters(const GraphModel& model);

std::vector<std::pair<std::string, Tensor*>> named_parameters(GraphModel& model);

/// Pairwise cosine similarity of embedding rows. A zero-norm row is an error
/// naming the node.
Tensor cosine_similarity(const Tensor& V);

/// Per row, keep the top_k most similar other nodes (ties to the lower
/// index) and force the self-loop.
Tensor build_adjacency(const Tensor& similarity, std::size_t top_k);

/// Convenience: both graph artifacts from the model's current embeddings.
SensorGraph derive_graph(const GraphModel& model);

/// Tape wiring of the full forward pass for an x batch of shape [B, D, L].
struct GraphForward {
    Tape::NodeId features = -1;  // Z: [B, D, Emb]
    Tape::NodeId alpha = -1;     // attention weights: [B, D, D]
    Tape::NodeId forecast = -1;  // [B, D, H]
    std::vector<Tape::NodeId> params;
};
GraphForward graph_forward(Tape& tape, const GraphModel& model, const Tensor& adjacency,
                           const Tensor& x);

/// Attention stage only: (Z, alpha) values for a fixed adjacency.
std::pair<Tensor, Tensor> attention_forward(const GraphModel& model,
                                            const Tensor& adjacency, const Tensor& x);

/// Head stage only: per node i, head(v_i ∘ z_i), weights shared across nodes.
Tensor forecast(const GraphModel& model, const Tensor& features);

/// End-to-end inference: [B, D, H] forecasts.
Tensor graph_predict(const GraphModel& model, const Tensor& adjacency, const Tensor& x);

struct GraphTraining {
    GraphModel model;
    TrainResult result;
    SensorGraph graph;  // from the final embeddings
};

/// Joint training of V, W, attention and head; the adjacency is rebuilt from
/// the current embeddings at the start of every epoch.
GraphTraining train_graph(const WindowBatch& train, const WindowBatch& val,
                          GraphConfig config, const TrainOptions& options,
                          std::uint64_t seed);

/// Edge list "source,target,similarity" for every off-diagonal edge of A.
void export_adjacency_csv(const SensorGraph& graph,
                          const std::vector<std::string>& names,
                          const std::string& path);

Checkpoint to_checkpoint(const GraphModel& model, const SensorGraph& graph);
GraphModel graph_from_checkpoint(const Checkpoint& ckpt);

} // namespace tracecast
