#pragma once

#include "tracecast/graphnet.hpp"
#include "tracecast/nbeats.hpp"
#include "tracecast/synth.hpp"
#include "tracecast/training.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace tracecast {

struct ModelConfig {
    std::string kind = "gnn";  // "nbeats" or "gnn"
    NBeatsConfig nbeats;       // lookback/horizon filled per window at run time
    GraphConfig graph;
    std::vector<std::size_t> top_k_list = {1, 3, 6};  // gnn ablation sweep
};

struct DetectionConfig {
    std::size_t top_b = 1;
    double threshold = 0.1;
};

/**
 * Fully validated run configuration. Every field has the documented default;
 * out_dir resolves config > TRACECAST_OUT > "./out".
 */
struct RunConfig {
    std::string dataset_name = "dataset";
    RecipeSpec recipe;
    std::vector<AnomalySpec> anomalies;
    ModelConfig model;
    TrainOptions training;
    DetectionConfig detection;
    std::vector<std::pair<std::size_t, std::size_t>> windows = {
        {10, 3}, {20, 5}, {50, 10}, {100, 20}};
    std::uint64_t seed = 42;
    std::string out_dir;
};

/// The six lookback/horizon pairs the toolkit supports.
const std::vector<std::pair<std::size_t, std::size_t>>& supported_windows();

/**
 * Parse and validate a config document. Unknown keys, type errors and range
 * errors are all collected and reported together in one ConfigError, each
 * prefixed with its JSON-path locator; nothing is accepted partially.
 */
RunConfig validate_config(const std::string& json_text);

/// validate_config over a file's contents. DataError if unreadable.
RunConfig load_config(const std::string& path);

} // namespace tracecast
