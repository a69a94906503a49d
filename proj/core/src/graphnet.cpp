#include "tracecast/graphnet.hpp"

#include "tracecast/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace tracecast {

namespace {

void validate_config(const GraphConfig& c) {
    if (c.embed_dim == 0 || c.lookback == 0 || c.horizon == 0 || c.node_count == 0)
        throw ConfigError("graph config dimensions must all be positive");
    if (c.node_count == 1) {
        if (c.top_k != 0)
            throw ConfigError("graph config: top_k must be 0 for a single node");
    } else if (c.top_k < 1 || c.top_k > c.node_count - 1) {
        throw ConfigError("graph config: top_k " + std::to_string(c.top_k) +
                          " outside 1.." + std::to_string(c.node_count - 1));
    }
}

void init_uniform(Tensor& t, std::size_t fan_in, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    double* p = t.data();
    for (std::size_t i = 0; i < t.size(); ++i) p[i] = dist(rng);
}

class GraphDriver final : public FitDriver {
public:
    GraphDriver(GraphModel& model, double lr) : model_(model) {
        for (auto& [name, tensor] : named_parameters(model_)) {
            names_.push_back(name);
            params_.push_back(tensor);
        }
        std::vector<Tensor> shapes;
        shapes.reserve(params_.size());
        for (Tensor* p : params_) shapes.emplace_back(p->shape());
        state_ = make_optimizer_state(shapes, lr);
        adjacency_ = derive_graph(model_).adjacency;
    }

    void epoch_start(std::size_t) override {
        adjacency_ = derive_graph(model_).adjacency;
    }

    double train_step(const Tensor& x, const Tensor& y) override {
        Tape tape;
        const GraphForward fwd = graph_forward(tape, model_, adjacency_, x);
        const Tape::NodeId loss = mse_node(tape, fwd.forecast, y, x.dim(0));
        tape.backward(loss);

        std::vector<const Tensor*> grads;
        grads.reserve(fwd.params.size());
        for (Tape::NodeId id : fwd.params) grads.push_back(&tape.grad(id));
        adam_step(params_, grads, state_, names_);
        return tape.value(loss).item();
    }

    double eval_loss(const Tensor& x, const Tensor& y) override {
        Tape tape;
        const GraphForward fwd = graph_forward(tape, model_, adjacency_, x);
        return tape.value(mse_node(tape, fwd.forecast, y, x.dim(0))).item();
    }

    OptimizerState& optimizer() override { return state_; }

private:
    static Tape::NodeId mse_node(Tape& tape, Tape::NodeId forecast, const Tensor& y,
                                 std::size_t batch) {
        const Tape::NodeId target = tape.leaf(y, "target");
        const Tape::NodeId err = tape.sub(forecast, target);
        return tape.scale(tape.sum_all(tape.mul(err, err)),
                          1.0 / static_cast<double>(batch));
    }

    GraphModel& model_;
    Tensor adjacency_;
    std::vector<Tensor*> params_;
    std::vector<std::string> names_;
    OptimizerState state_;
};

} // namespace

GraphModel build_graph_model(const GraphConfig& config, std::uint64_t seed) {
    validate_config(config);
    const std::size_t D = config.node_count;
    const std::size_t E = config.embed_dim;
    const std::size_t L = config.lookback;
    const std::size_t H = config.horizon;

    GraphModel model;
    model.config = config;
    model.seed = seed;
    model.V = Tensor({D, E});
    model.W = Tensor({L, E});
    if (config.input_bias) model.W_b = Tensor({E});
    model.attn = Tensor({4 * E});
    model.head_w = Tensor({E, H});
    model.head_b = Tensor({H});

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < D; ++i) {
        double norm_sq = 0.0;
        for (std::size_t e = 0; e < E; ++e) {
            const double v = normal(rng);
            model.V.at(i, e) = v;
            norm_sq += v * v;
        }
        // A fresh E-dimensional normal row is never numerically zero; the
        // normalization keeps every row on the unit sphere.
        const double norm = std::sqrt(norm_sq);
        for (std::size_t e = 0; e < E; ++e) model.V.at(i, e) /= norm;
    }
    init_uniform(model.W, L, rng);
    if (config.input_bias) init_uniform(model.W_b, L, rng);
    init_uniform(model.attn, 2 * E, rng);
    init_uniform(model.head_w, E, rng);
    init_uniform(model.head_b, E, rng);
    return model;
}

std::size_t graph_parameter_count(const GraphConfig& c) {
    std::size_t total = c.node_count * c.embed_dim + c.embed_dim * c.lookback +
                        4 * c.embed_dim + c.embed_dim * c.horizon + c.horizon;
    if (c.input_bias) total += c.embed_dim;
    return total;
}

std::size_t count_parameters(const GraphModel& model) {
    std::size_t total = model.V.size() + model.W.size() + model.attn.size() +
                        model.head_w.size() + model.head_b.size();
    total += model.W_b.size();
    return total;
}

std::vector<std::pair<std::string, Tensor*>> named_parameters(GraphModel& model) {
    std::vector<std::pair<std::string, Tensor*>> out;
    out.emplace_back("V", &model.V);
    out.emplace_back("W", &model.W);
    if (model.config.input_bias) out.emplace_back("W.b", &model.W_b);
    out.emplace_back("attn", &model.attn);
    out.emplace_back("head.w", &model.head_w);
    out.emplace_back("head.b", &model.head_b);
    return out;
}

Tensor cosine_similarity(const Tensor& V) {
    if (V.ndim() != 2)
        throw ShapeError("cosine_similarity: expected [D, Emb], got " + V.shape_str());
    const std::size_t D = V.dim(0), E = V.dim(1);

    std::vector<double> norms(D);
    for (std::size_t i = 0; i < D; ++i) {
        double s = 0.0;
        for (std::size_t e = 0; e < E; ++e) s += V.at(i, e) * V.at(i, e);
        if (s == 0.0)
            throw NumericError("cosine_similarity: node " + std::to_string(i) +
                               " has a zero-norm embedding");
        norms[i] = std::sqrt(s);
    }

    Tensor out({D, D});
    for (std::size_t i = 0; i < D; ++i)
        for (std::size_t j = 0; j < D; ++j) {
            double dot = 0.0;
            for (std::size_t e = 0; e < E; ++e) dot += V.at(i, e) * V.at(j, e);
            out.at(i, j) = dot / (norms[i] * norms[j]);
        }
    return out;
}

Tensor build_adjacency(const Tensor& similarity, std::size_t top_k) {
    if (similarity.ndim() != 2 || similarity.dim(0) != similarity.dim(1))
        throw ShapeError("build_adjacency: expected a square matrix, got " +
                         similarity.shape_str());
    const std::size_t D = similarity.dim(0);
    if (top_k > D - 1)
        throw ConfigError("build_adjacency: top_k " + std::to_string(top_k) +
                          " exceeds " + std::to_string(D - 1) + " candidates");

    Tensor A({D, D});
    std::vector<std::size_t> order(D);
    for (std::size_t i = 0; i < D; ++i) {
        std::iota(order.begin(), order.end(), 0);
        // Highest similarity first, lower index first on ties; skip i itself.
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) {
                             return similarity.at(i, a) > similarity.at(i, b);
                         });
        std::size_t taken = 0;
        for (std::size_t k = 0; k < D && taken < top_k; ++k) {
            if (order[k] == i) continue;
            A.at(i, order[k]) = 1.0;
            ++taken;
        }
        A.at(i, i) = 1.0;
    }
    return A;
}

SensorGraph derive_graph(const GraphModel& model) {
    SensorGraph g;
    g.similarity = cosine_similarity(model.V);
    g.adjacency = build_adjacency(g.similarity, model.config.top_k);
    return g;
}

GraphForward graph_forward(Tape& tape, const GraphModel& model, const Tensor& adjacency,
                           const Tensor& x) {
    const GraphConfig& c = model.config;
    if (x.ndim() != 3 || x.dim(1) != c.node_count || x.dim(2) != c.lookback)
        throw ShapeError("graph_forward: expected [B, " + std::to_string(c.node_count) +
                         ", " + std::to_string(c.lookback) + "] input, got " +
                         x.shape_str());
    if (adjacency.ndim() != 2 || adjacency.dim(0) != c.node_count ||
        adjacency.dim(1) != c.node_count)
        throw ShapeError("graph_forward: adjacency " + adjacency.shape_str() +
                         " does not match " + std::to_string(c.node_count) + " nodes");

    const std::size_t B = x.dim(0);
    const std::size_t E = c.embed_dim;

    GraphForward fwd;
    const Tape::NodeId V = tape.leaf(model.V, "V");
    const Tape::NodeId W = tape.leaf(model.W, "W");
    fwd.params = {V, W};
    Tape::NodeId W_b = -1;
    if (c.input_bias) {
        W_b = tape.leaf(model.W_b, "W.b");
        fwd.params.push_back(W_b);
    }
    const Tape::NodeId attn = tape.leaf(model.attn, "attn");
    const Tape::NodeId head_w = tape.leaf(model.head_w, "head.w");
    const Tape::NodeId head_b = tape.leaf(model.head_b, "head.b");
    fwd.params.push_back(attn);
    fwd.params.push_back(head_w);
    fwd.params.push_back(head_b);

    const Tape::NodeId input = tape.leaf(x, "input");

    // Per-node features W·x_i, then g_i = v_i ++ (W·x_i).
    Tape::NodeId xw = tape.matmul(input, W);  // [B, D, E]
    if (c.input_bias) xw = tape.add(xw, W_b);
    const Tape::NodeId v_rows = tape.expand_leading(V, B);  // [B, D, E]
    const Tape::NodeId g = tape.concat_last(v_rows, xw);    // [B, D, 2E]

    // The bilinear logit a·(g_i ++ g_j) separates into two dot products.
    const Tape::NodeId a_self = tape.reshape(tape.slice_last(attn, 0, 2 * E), {2 * E, 1});
    const Tape::NodeId a_peer =
        tape.reshape(tape.slice_last(attn, 2 * E, 2 * E), {2 * E, 1});
    const Tape::NodeId u =
        tape.reshape(tape.matmul(g, a_self), {B, c.node_count});  // [B, D]
    const Tape::NodeId w =
        tape.reshape(tape.matmul(g, a_peer), {B, c.node_count});  // [B, D]
    const Tape::NodeId logits = tape.leaky_relu(tape.outer_add(u, w), c.leaky_slope);

    fwd.alpha = tape.masked_softmax(logits, adjacency);      // [B, D, D]
    fwd.features = tape.relu(tape.matmul(fwd.alpha, xw));    // [B, D, E]

    // Shared head on the embedding-gated features v_i ∘ z_i.
    const Tape::NodeId gated = tape.mul(fwd.features, V);
    fwd.forecast = tape.add(tape.matmul(gated, head_w), head_b);  // [B, D, H]
    return fwd;
}

std::pair<Tensor, Tensor> attention_forward(const GraphModel& model,
                                            const Tensor& adjacency, const Tensor& x) {
    Tape tape;
    const GraphForward fwd = graph_forward(tape, model, adjacency, x);
    return {tape.value(fwd.features), tape.value(fwd.alpha)};
}

Tensor forecast(const GraphModel& model, const Tensor& features) {
    const GraphConfig& c = model.config;
    if (features.ndim() != 3 || features.dim(1) != c.node_count ||
        features.dim(2) != c.embed_dim)
        throw ShapeError("forecast: expected [B, " + std::to_string(c.node_count) +
                         ", " + std::to_string(c.embed_dim) + "] features, got " +
                         features.shape_str());
    const std::size_t B = features.dim(0);
    const std::size_t D = c.node_count, E = c.embed_dim, H = c.horizon;

    Tensor out({B, D, H});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t i = 0; i < D; ++i)
            for (std::size_t h = 0; h < H; ++h) {
                double acc = model.head_b.data()[h];
                for (std::size_t e = 0; e < E; ++e)
                    acc += model.V.at(i, e) * features.at(b, i, e) *
                           model.head_w.at(e, h);
                out.at(b, i, h) = acc;
            }
    return out;
}

Tensor graph_predict(const GraphModel& model, const Tensor& adjacency, const Tensor& x) {
    Tape tape;
    return tape.value(graph_forward(tape, model, adjacency, x).forecast);
}

GraphTraining train_graph(const WindowBatch& train, const WindowBatch& val,
                          GraphConfig config, const TrainOptions& options,
                          std::uint64_t seed) {
    config.lookback = train.lookback();
    config.horizon = train.horizon();
    config.node_count = train.inputs.dim(1);

    GraphTraining out{build_graph_model(config, seed), {}, {}};
    GraphDriver driver(out.model, options.lr);
    const bool have_val = val.count() > 0;
    out.result = fit(driver, train.inputs, train.targets,
                     have_val ? val.inputs : Tensor(), have_val ? val.targets : Tensor(),
                     options, seed);
    out.graph = derive_graph(out.model);
    return out;
}

void export_adjacency_csv(const SensorGraph& graph,
                          const std::vector<std::string>& names,
                          const std::string& path) {
    const std::size_t D = graph.adjacency.dim(0);
    if (names.size() != D)
        throw ShapeError("export_adjacency_csv: " + std::to_string(names.size()) +
                         " names for " + std::to_string(D) + " nodes");

    std::string out = "source,target,similarity\n";
    char buf[32];
    for (std::size_t i = 0; i < D; ++i)
        for (std::size_t j = 0; j < D; ++j) {
            if (i == j || graph.adjacency.at(i, j) == 0.0) continue;
            out += names[i];
            out += ',';
            out += names[j];
            out += ',';
            const auto res =
                std::to_chars(buf, buf + sizeof(buf), graph.similarity.at(i, j));
            out.append(buf, res.ptr);
            out += '\n';
        }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw DataError("cannot open adjacency file for writing: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f)
        throw DataError("write failed for adjacency file: " + path);
}

Checkpoint to_checkpoint(const GraphModel& model, const SensorGraph& graph) {
    nlohmann::json desc;
    desc["kind"] = "gnn";
    desc["embed_dim"] = model.config.embed_dim;
    desc["top_k"] = model.config.top_k;
    desc["lookback"] = model.config.lookback;
    desc["horizon"] = model.config.horizon;
    desc["node_count"] = model.config.node_count;
    desc["input_bias"] = model.config.input_bias;
    desc["leaky_slope"] = model.config.leaky_slope;

    Checkpoint ckpt;
    ckpt.seed = model.seed;
    ckpt.descriptor = desc.dump();
    for (auto& [name, tensor] : named_parameters(const_cast<GraphModel&>(model)))
        ckpt.tensors.emplace_back(name, *tensor);
    ckpt.tensors.emplace_back("adjacency", graph.adjacency);
    return ckpt;
}

GraphModel graph_from_checkpoint(const Checkpoint& ckpt) {
    nlohmann::json desc;
    try {
        desc = nlohmann::json::parse(ckpt.descriptor);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint descriptor is not valid JSON: ") +
                        e.what());
    }
    if (desc.value("kind", "") != "gnn")
        throw DataError("checkpoint descriptor kind is \"" +
                        desc.value("kind", std::string("<missing>")) +
                        "\", expected \"gnn\"");

    GraphConfig config;
    config.embed_dim = desc.at("embed_dim").get<std::size_t>();
    config.top_k = desc.at("top_k").get<std::size_t>();
    config.lookback = desc.at("lookback").get<std::size_t>();
    config.horizon = desc.at("horizon").get<std::size_t>();
    config.node_count = desc.at("node_count").get<std::size_t>();
    config.input_bias = desc.at("input_bias").get<bool>();
    config.leaky_slope = desc.at("leaky_slope").get<double>();

    GraphModel model = build_graph_model(config, ckpt.seed);
    for (auto& [name, tensor] : named_parameters(model)) {
        const Tensor& stored = ckpt.tensor(name);
        if (!stored.same_shape(*tensor))
            throw DataError("checkpoint tensor \"" + name + "\" has shape " +
                            stored.shape_str() + ", expected " + tensor->shape_str());
        *tensor = stored;
    }
    return model;
}

} // namespace tracecast
