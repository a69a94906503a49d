#include "tracecast/training.hpp"

#include "tracecast/errors.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace tracecast {

Tensor gather_rows(const Tensor& t, const std::vector<std::size_t>& idx) {
    if (t.ndim() == 0)
        throw ShapeError("gather_rows: cannot index a scalar");
    const std::size_t rows = t.dim(0);
    const std::size_t stride = rows == 0 ? 0 : t.size() / rows;

    std::vector<std::size_t> shape = t.shape();
    shape[0] = idx.size();
    Tensor out(shape);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= rows)
            throw ShapeError("gather_rows: index " + std::to_string(idx[i]) +
                             " out of range for " + t.shape_str());
        std::copy(t.data() + idx[i] * stride, t.data() + (idx[i] + 1) * stride,
                  out.data() + i * stride);
    }
    return out;
}

TrainResult fit(FitDriver& driver, const Tensor& train_x, const Tensor& train_y,
                const Tensor& val_x, const Tensor& val_y, const TrainOptions& options,
                std::uint64_t shuffle_seed) {
    const std::size_t B = train_x.dim(0);
    if (B == 0)
        throw DataError("fit: no training windows");
    if (train_y.dim(0) != B)
        throw ShapeError("fit: " + std::to_string(B) + " inputs vs " +
                         std::to_string(train_y.dim(0)) + " targets");
    if (options.batch_size == 0)
        throw ConfigError("fit: batch size must be positive");

    OptimizerState& opt = driver.optimizer();
    opt.plateau_factor = options.plateau_factor;
    opt.plateau_patience = options.plateau_patience;

    const bool have_val = val_x.ndim() > 0 && val_x.dim(0) > 0;

    std::mt19937_64 rng(shuffle_seed);
    std::vector<std::size_t> order(B);
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    for (std::size_t epoch = 0; epoch < options.max_epochs; ++epoch) {
        driver.epoch_start(epoch);
        std::shuffle(order.begin(), order.end(), rng);

        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < B; start += options.batch_size) {
            const std::size_t end = std::min(B, start + options.batch_size);
            const std::vector<std::size_t> batch_idx(order.begin() + start,
                                                     order.begin() + end);
            const Tensor bx = gather_rows(train_x, batch_idx);
            const Tensor by = gather_rows(train_y, batch_idx);
            try {
                epoch_loss += driver.train_step(bx, by);
            } catch (const NumericError& e) {
                throw NumericError("epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(batches) + ": " + e.what());
            }
            ++batches;
        }
        epoch_loss /= static_cast<double>(batches);
        result.final_train_loss = epoch_loss;

        const double val_loss = have_val ? driver.eval_loss(val_x, val_y) : epoch_loss;
        result.val_history.push_back(val_loss);
        result.best_val = std::min(result.best_val, val_loss);
        result.epochs_run = epoch + 1;

        plateau_schedule(opt, val_loss);
        if (early_stop(result.val_history, options.early_stop_patience)) break;
    }
    return result;
}

} // namespace tracecast
