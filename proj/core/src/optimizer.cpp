#include "tracecast/optimizer.hpp"

#include "tracecast/errors.hpp"

#include <algorithm>
#include <cmath>

namespace tracecast {

OptimizerState make_optimizer_state(const std::vector<Tensor>& params, double lr) {
    OptimizerState state;
    state.lr = lr;
    state.m.reserve(params.size());
    state.v.reserve(params.size());
    for (const Tensor& p : params) {
        state.m.emplace_back(p.shape());
        state.v.emplace_back(p.shape());
    }
    return state;
}

void adam_step(const std::vector<Tensor*>& params,
               const std::vector<const Tensor*>& grads, OptimizerState& state,
               const std::vector<std::string>& names) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw ShapeError("adam_step: " + std::to_string(params.size()) +
                         " parameters vs " + std::to_string(grads.size()) +
                         " gradients and " + std::to_string(state.m.size()) +
                         " moment slots");

    auto label = [&](std::size_t i) {
        return i < names.size() ? names[i] : "parameter " + std::to_string(i);
    };

    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i]->same_shape(*grads[i]))
            throw ShapeError("adam_step: gradient shape " + grads[i]->shape_str() +
                             " does not match " + label(i) + " " +
                             params[i]->shape_str());
        if (!grads[i]->all_finite())
            throw NumericError("adam_step: non-finite gradient for " + label(i));
    }

    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

    for (std::size_t i = 0; i < params.size(); ++i) {
        double* p = params[i]->data();
        const double* g = grads[i]->data();
        double* m = state.m[i].data();
        double* v = state.v[i].data();
        const std::size_t n = params[i]->size();
        for (std::size_t j = 0; j < n; ++j) {
            m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
            v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
            const double m_hat = m[j] / bc1;
            const double v_hat = v[j] / bc2;
            p[j] -= state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
        }
    }
}

void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads,
               OptimizerState& state, const std::vector<std::string>& names) {
    std::vector<Tensor*> p;
    std::vector<const Tensor*> g;
    p.reserve(params.size());
    g.reserve(grads.size());
    for (Tensor& t : params) p.push_back(&t);
    for (const Tensor& t : grads) g.push_back(&t);
    adam_step(p, g, state, names);
}

void plateau_schedule(OptimizerState& state, double val_loss) {
    if (!std::isfinite(val_loss))
        throw NumericError("plateau_schedule: validation loss is not finite");
    if (val_loss < state.best_val) {
        state.best_val = val_loss;
        state.plateau_counter = 0;
        return;
    }
    state.plateau_counter += 1;
    if (state.plateau_counter >= state.plateau_patience) {
        state.lr *= state.plateau_factor;
        state.plateau_counter = 0;
    }
}

bool early_stop(const std::vector<double>& history, std::size_t patience) {
    if (history.empty()) return false;
    const auto best = std::min_element(history.begin(), history.end());
    const std::size_t best_idx = static_cast<std::size_t>(best - history.begin());
    return history.size() - 1 - best_idx > patience;
}

} // namespace tracecast
