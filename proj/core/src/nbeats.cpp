#include "tracecast/nbeats.hpp"

#include "tracecast/errors.hpp"

#include <json.hpp>

#include <random>
#include <utility>

namespace tracecast {

namespace {

void validate_config(const NBeatsConfig& c) {
    if (c.num_stacks == 0 || c.blocks_per_stack == 0 || c.basis_dim == 0 ||
        c.hidden_width == 0 || c.lookback == 0 || c.horizon == 0)
        throw ConfigError("nbeats config fields must all be positive");
}

void init_uniform(Tensor& t, std::size_t fan_in, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    double* p = t.data();
    for (std::size_t i = 0; i < t.size(); ++i) p[i] = dist(rng);
}

/// Trains one variable's model; shares the loop in training.cpp.
class NBeatsDriver final : public FitDriver {
public:
    NBeatsDriver(NBeatsModel& model, double lr) : model_(model) {
        for (auto& [name, tensor] : named_parameters(model_)) {
            names_.push_back(name);
            params_.push_back(tensor);
        }
        std::vector<Tensor> shapes;
        shapes.reserve(params_.size());
        for (Tensor* p : params_) shapes.emplace_back(p->shape());
        state_ = make_optimizer_state(shapes, lr);
    }

    double train_step(const Tensor& x, const Tensor& y) override {
        Tape tape;
        const NBeatsForward fwd = nbeats_forward(tape, model_, x);
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
        const NBeatsForward fwd = nbeats_forward(tape, model_, x);
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

    NBeatsModel& model_;
    std::vector<Tensor*> params_;
    std::vector<std::string> names_;
    OptimizerState state_;
};

} // namespace

NBeatsModel build_nbeats(const NBeatsConfig& config, std::uint64_t seed) {
    validate_config(config);
    const std::size_t L = config.lookback;
    const std::size_t H = config.horizon;
    const std::size_t W = config.hidden_width;
    const std::size_t P = config.basis_dim;

    NBeatsModel model;
    model.config = config;
    model.seed = seed;
    model.stacks.resize(config.num_stacks);
    for (NBeatsBlock& blk : model.stacks) {
        blk.fc_w.resize(4);
        blk.fc_b.resize(4);
        blk.fc_w[0] = Tensor({L, W});
        for (std::size_t i = 1; i < 4; ++i) blk.fc_w[i] = Tensor({W, W});
        for (std::size_t i = 0; i < 4; ++i) blk.fc_b[i] = Tensor({W});
        blk.theta_b = Tensor({W, P});
        blk.theta_f = Tensor({W, P});
        blk.back_w = Tensor({P, L});
        blk.back_b = Tensor({L});
        blk.fore_w = Tensor({P, H});
        blk.fore_b = Tensor({H});
    }

    std::mt19937_64 rng(seed);
    for (NBeatsBlock& blk : model.stacks) {
        for (std::size_t i = 0; i < 4; ++i) {
            const std::size_t fan_in = i == 0 ? L : W;
            init_uniform(blk.fc_w[i], fan_in, rng);
            init_uniform(blk.fc_b[i], fan_in, rng);
        }
        init_uniform(blk.theta_b, W, rng);
        init_uniform(blk.theta_f, W, rng);
        init_uniform(blk.back_w, P, rng);
        init_uniform(blk.back_b, P, rng);
        init_uniform(blk.fore_w, P, rng);
        init_uniform(blk.fore_b, P, rng);
    }
    return model;
}

std::size_t nbeats_parameter_count(const NBeatsConfig& c) {
    const std::size_t L = c.lookback, H = c.horizon;
    const std::size_t W = c.hidden_width, P = c.basis_dim;
    const std::size_t per_stack = (L * W + W) + 3 * (W * W + W) + 2 * (W * P) +
                                  (P * L + L) + (P * H + H);
    return c.num_stacks * per_stack;
}

std::size_t count_parameters(const NBeatsModel& model) {
    std::size_t total = 0;
    for (const NBeatsBlock& blk : model.stacks) {
        for (std::size_t i = 0; i < 4; ++i) total += blk.fc_w[i].size() + blk.fc_b[i].size();
        total += blk.theta_b.size() + blk.theta_f.size();
        total += blk.back_w.size() + blk.back_b.size();
        total += blk.fore_w.size() + blk.fore_b.size();
    }
    return total;
}

std::vector<std::pair<std::string, Tensor*>> named_parameters(NBeatsModel& model) {
    std::vector<std::pair<std::string, Tensor*>> out;
    for (std::size_t s = 0; s < model.stacks.size(); ++s) {
        NBeatsBlock& blk = model.stacks[s];
        const std::string prefix = "stack" + std::to_string(s) + ".";
        for (std::size_t i = 0; i < 4; ++i) {
            out.emplace_back(prefix + "fc" + std::to_string(i) + ".w", &blk.fc_w[i]);
            out.emplace_back(prefix + "fc" + std::to_string(i) + ".b", &blk.fc_b[i]);
        }
        out.emplace_back(prefix + "theta_b", &blk.theta_b);
        out.emplace_back(prefix + "theta_f", &blk.theta_f);
        out.emplace_back(prefix + "back.w", &blk.back_w);
        out.emplace_back(prefix + "back.b", &blk.back_b);
        out.emplace_back(prefix + "fore.w", &blk.fore_w);
        out.emplace_back(prefix + "fore.b", &blk.fore_b);
    }
    return out;
}

NBeatsForward nbeats_forward(Tape& tape, const NBeatsModel& model, const Tensor& x) {
    if (x.ndim() != 2 || x.dim(1) != model.config.lookback)
        throw ShapeError("nbeats_forward: expected [B, " +
                         std::to_string(model.config.lookback) + "] input, got " +
                         x.shape_str());

    NBeatsForward fwd;
    // Leaves appear in named_parameters order so gradients line back up.
    std::vector<std::vector<Tape::NodeId>> stack_ids(model.stacks.size());
    auto params = named_parameters(const_cast<NBeatsModel&>(model));
    std::size_t cursor = 0;
    for (std::size_t s = 0; s < model.stacks.size(); ++s) {
        for (std::size_t i = 0; i < 14; ++i) {
            const Tape::NodeId id =
                tape.leaf(*params[cursor].second, params[cursor].first);
            stack_ids[s].push_back(id);
            fwd.params.push_back(id);
            ++cursor;
        }
    }

    Tape::NodeId residual = tape.leaf(x, "input");
    Tape::NodeId forecast = -1;
    for (std::size_t s = 0; s < model.stacks.size(); ++s) {
        // Layout per stack: fc0.w, fc0.b, ..., fc3.w, fc3.b,
        // theta_b, theta_f, back.w, back.b, fore.w, fore.b.
        const std::vector<Tape::NodeId>& ids = stack_ids[s];
        for (std::size_t rep = 0; rep < model.config.blocks_per_stack; ++rep) {
            Tape::NodeId h = residual;
            for (std::size_t i = 0; i < 4; ++i)
                h = tape.relu(tape.add(tape.matmul(h, ids[2 * i]), ids[2 * i + 1]));
            const Tape::NodeId theta_b = tape.matmul(h, ids[8]);
            const Tape::NodeId theta_f = tape.matmul(h, ids[9]);
            const Tape::NodeId back = tape.add(tape.matmul(theta_b, ids[10]), ids[11]);
            const Tape::NodeId fore = tape.add(tape.matmul(theta_f, ids[12]), ids[13]);
            fwd.backcasts.push_back(back);
            residual = tape.sub(residual, back);
            forecast = forecast < 0 ? fore : tape.add(forecast, fore);
        }
    }
    fwd.forecast = forecast;
    fwd.residual = residual;
    return fwd;
}

std::pair<Tensor, Tensor> nbeats_predict(const NBeatsModel& model, const Tensor& x) {
    Tape tape;
    const NBeatsForward fwd = nbeats_forward(tape, model, x);
    return {tape.value(fwd.forecast), tape.value(fwd.residual)};
}

Tensor select_variable(const Tensor& batch, std::size_t variable) {
    if (batch.ndim() != 3)
        throw ShapeError("select_variable: expected [B, D, K], got " + batch.shape_str());
    const std::size_t B = batch.dim(0), D = batch.dim(1), K = batch.dim(2);
    if (variable >= D)
        throw ShapeError("select_variable: variable " + std::to_string(variable) +
                         " out of range for " + batch.shape_str());
    Tensor out({B, K});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t k = 0; k < K; ++k)
            out.at(b, k) = batch.at(b, variable, k);
    return out;
}

PerVariableTraining train_per_variable(const WindowBatch& train, const WindowBatch& val,
                                       const std::vector<std::string>& variable_names,
                                       NBeatsConfig config, const TrainOptions& options,
                                       std::uint64_t seed) {
    const std::size_t D = train.inputs.dim(1);
    if (variable_names.size() != D)
        throw ShapeError("train_per_variable: " + std::to_string(variable_names.size()) +
                         " names for " + std::to_string(D) + " variables");
    config.lookback = train.lookback();
    config.horizon = train.horizon();

    const bool have_val = val.count() > 0;
    PerVariableTraining out;
    out.models.reserve(D);
    out.results.reserve(D);
    for (std::size_t d = 0; d < D; ++d) {
        const std::uint64_t var_seed = seed + d;
        NBeatsModel model = build_nbeats(config, var_seed);
        NBeatsDriver driver(model, options.lr);
        const Tensor tx = select_variable(train.inputs, d);
        const Tensor ty = select_variable(train.targets, d);
        const Tensor vx = have_val ? select_variable(val.inputs, d) : Tensor();
        const Tensor vy = have_val ? select_variable(val.targets, d) : Tensor();
        try {
            out.results.push_back(fit(driver, tx, ty, vx, vy, options, var_seed));
        } catch (const NumericError& e) {
            throw NumericError("variable \"" + variable_names[d] + "\": " + e.what());
        }
        out.models.push_back(std::move(model));
    }
    return out;
}

Checkpoint to_checkpoint(const NBeatsModel& model) {
    nlohmann::json desc;
    desc["kind"] = "nbeats";
    desc["num_stacks"] = model.config.num_stacks;
    desc["blocks_per_stack"] = model.config.blocks_per_stack;
    desc["basis_dim"] = model.config.basis_dim;
    desc["hidden_width"] = model.config.hidden_width;
    desc["lookback"] = model.config.lookback;
    desc["horizon"] = model.config.horizon;

    Checkpoint ckpt;
    ckpt.seed = model.seed;
    ckpt.descriptor = desc.dump();
    for (auto& [name, tensor] : named_parameters(const_cast<NBeatsModel&>(model)))
        ckpt.tensors.emplace_back(name, *tensor);
    return ckpt;
}

NBeatsModel nbeats_from_checkpoint(const Checkpoint& ckpt) {
    nlohmann::json desc;
    try {
        desc = nlohmann::json::parse(ckpt.descriptor);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint descriptor is not valid JSON: ") +
                        e.what());
    }
    if (desc.value("kind", "") != "nbeats")
        throw DataError("checkpoint descriptor kind is \"" +
                        desc.value("kind", std::string("<missing>")) +
                        "\", expected \"nbeats\"");

    NBeatsConfig config;
    config.num_stacks = desc.at("num_stacks").get<std::size_t>();
    config.blocks_per_stack = desc.at("blocks_per_stack").get<std::size_t>();
    config.basis_dim = desc.at("basis_dim").get<std::size_t>();
    config.hidden_width = desc.at("hidden_width").get<std::size_t>();
    config.lookback = desc.at("lookback").get<std::size_t>();
    config.horizon = desc.at("horizon").get<std::size_t>();

    NBeatsModel model = build_nbeats(config, ckpt.seed);
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
