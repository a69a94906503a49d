#include "tracecast/errors.hpp"
#include "tracecast/training.hpp"

#include "doctest.h"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

using namespace tracecast;

namespace {

// Scripted driver: records every batch it sees and plays back a fixed
// validation-loss sequence, so the loop's control flow can be checked
// without any real model underneath.
struct ScriptedDriver : FitDriver {
    OptimizerState state;
    std::vector<std::vector<double>> batches;   // first column of each batch x
    std::vector<double> val_script;
    std::size_t evals = 0;
    std::size_t epoch_starts = 0;
    bool explode = false;

    void epoch_start(std::size_t) override { ++epoch_starts; }

    double train_step(const Tensor& x, const Tensor&) override {
        if (explode)
            throw NumericError("loss went non-finite");
        std::vector<double> firsts;
        for (std::size_t b = 0; b < x.dim(0); ++b)
            firsts.push_back(x.at(b, 0));
        batches.push_back(std::move(firsts));
        return 1.0;
    }

    double eval_loss(const Tensor&, const Tensor&) override {
        const double v =
            evals < val_script.size() ? val_script[evals] : val_script.back();
        ++evals;
        return v;
    }

    OptimizerState& optimizer() override { return state; }
};

// x[b, 0] = b so a batch's first column reveals which windows it got.
std::pair<Tensor, Tensor> indexed_windows(std::size_t count) {
    Tensor x({count, 2});
    Tensor y({count, 1});
    for (std::size_t b = 0; b < count; ++b) {
        x.at(b, 0) = static_cast<double>(b);
        x.at(b, 1) = 0.5;
        y[b] = 0.0;
    }
    return {x, y};
}

} // namespace

TEST_SUITE("training") {

TEST_CASE("gather_rows copies whole slices in order") {
    Tensor t({3, 2, 2}, {0, 1, 2, 3, 10, 11, 12, 13, 20, 21, 22, 23});
    Tensor g = gather_rows(t, {2, 0});
    CHECK(g.shape() == std::vector<std::size_t>{2, 2, 2});
    CHECK(g.values() == std::vector<double>{20, 21, 22, 23, 0, 1, 2, 3});

    CHECK_THROWS_AS(gather_rows(t, {3}), ShapeError);
    Tensor empty = gather_rows(t, {});
    CHECK(empty.dim(0) == 0);
}

TEST_CASE("batches partition the shuffled epoch, last one short") {
    auto [x, y] = indexed_windows(10);
    ScriptedDriver driver;
    driver.val_script = {1.0};
    TrainOptions opt;
    opt.max_epochs = 1;
    opt.batch_size = 4;

    fit(driver, x, y, Tensor{}, Tensor{}, opt, 99);

    REQUIRE(driver.batches.size() == 3);
    CHECK(driver.batches[0].size() == 4);
    CHECK(driver.batches[1].size() == 4);
    CHECK(driver.batches[2].size() == 2);

    // together the batches cover every window exactly once
    std::vector<double> seen;
    for (const auto& b : driver.batches)
        seen.insert(seen.end(), b.begin(), b.end());
    std::sort(seen.begin(), seen.end());
    std::vector<double> expected(10);
    std::iota(expected.begin(), expected.end(), 0.0);
    CHECK(seen == expected);
    CHECK(driver.epoch_starts == 1);
}

TEST_CASE("shuffling depends only on the seed") {
    auto [x, y] = indexed_windows(16);
    TrainOptions opt;
    opt.max_epochs = 2;
    opt.batch_size = 4;

    auto run = [&](std::uint64_t seed) {
        ScriptedDriver d;
        d.val_script = {1.0};
        fit(d, x, y, Tensor{}, Tensor{}, opt, seed);
        return d.batches;
    };
    CHECK(run(7) == run(7));
    CHECK(run(7) != run(8));

    // consecutive epochs reshuffle rather than repeating the first order
    ScriptedDriver d;
    d.val_script = {1.0};
    fit(d, x, y, Tensor{}, Tensor{}, opt, 7);
    std::vector<std::vector<double>> epoch1(d.batches.begin(), d.batches.begin() + 4);
    std::vector<std::vector<double>> epoch2(d.batches.begin() + 4, d.batches.end());
    CHECK(epoch1 != epoch2);
}

TEST_CASE("without a validation set the epoch training loss stands in") {
    auto [x, y] = indexed_windows(8);
    ScriptedDriver driver;
    TrainOptions opt;
    opt.max_epochs = 3;
    opt.batch_size = 8;

    TrainResult r = fit(driver, x, y, Tensor{}, Tensor{}, opt, 1);
    CHECK(driver.evals == 0);  // eval_loss never called
    CHECK(r.val_history == std::vector<double>{1.0, 1.0, 1.0});
    CHECK(r.best_val == 1.0);
    CHECK(r.final_train_loss == 1.0);
    CHECK(r.epochs_run == 3);
}

TEST_CASE("validation set is scored once per epoch") {
    auto [x, y] = indexed_windows(8);
    auto [vx, vy] = indexed_windows(3);
    ScriptedDriver driver;
    driver.val_script = {5.0, 4.0, 6.0};
    TrainOptions opt;
    opt.max_epochs = 3;
    opt.batch_size = 4;

    TrainResult r = fit(driver, x, y, vx, vy, opt, 1);
    CHECK(driver.evals == 3);
    CHECK(r.val_history == std::vector<double>{5.0, 4.0, 6.0});
    CHECK(r.best_val == 4.0);
}

TEST_CASE("early stopping fires once the best validation loss goes stale") {
    auto [x, y] = indexed_windows(4);
    auto [vx, vy] = indexed_windows(2);
    ScriptedDriver driver;
    driver.val_script = {3.0};  // flat forever after
    TrainOptions opt;
    opt.max_epochs = 1000;
    opt.batch_size = 4;
    opt.early_stop_patience = 6;

    TrainResult r = fit(driver, x, y, vx, vy, opt, 1);
    // best at epoch 0; stops when it is 7 epochs old
    CHECK(r.epochs_run == 8);
    CHECK(r.best_val == 3.0);
}

TEST_CASE("plateau schedule inside the loop halves the learning rate") {
    auto [x, y] = indexed_windows(4);
    auto [vx, vy] = indexed_windows(2);
    ScriptedDriver driver;
    driver.state.lr = 0.08;
    driver.val_script = {2.0};
    TrainOptions opt;
    opt.max_epochs = 7;  // epoch 0 sets the best, then 6 stale epochs
    opt.batch_size = 4;
    opt.plateau_factor = 0.5;
    opt.plateau_patience = 3;

    fit(driver, x, y, vx, vy, opt, 1);
    // stale epochs 1..6 trigger twice: after 3 and after 6
    CHECK(driver.state.lr == doctest::Approx(0.02));
}

TEST_CASE("numeric failures carry the epoch and batch position") {
    auto [x, y] = indexed_windows(4);
    ScriptedDriver driver;
    driver.explode = true;
    TrainOptions opt;
    opt.max_epochs = 1;
    opt.batch_size = 2;

    std::string msg;
    try {
        fit(driver, x, y, Tensor{}, Tensor{}, opt, 1);
    } catch (const NumericError& e) {
        msg = e.what();
    }
    CHECK(msg.find("epoch 0") != std::string::npos);
    CHECK(msg.find("batch 0") != std::string::npos);
    CHECK(msg.find("loss went non-finite") != std::string::npos);
}

TEST_CASE("input validation") {
    auto [x, y] = indexed_windows(4);
    ScriptedDriver driver;
    TrainOptions opt;

    CHECK_THROWS_AS(fit(driver, Tensor({0, 2}), Tensor({0, 1}), Tensor{}, Tensor{},
                        opt, 1),
                    DataError);

    Tensor y_short = indexed_windows(3).second;
    CHECK_THROWS_AS(fit(driver, x, y_short, Tensor{}, Tensor{}, opt, 1), ShapeError);

    opt.batch_size = 0;
    CHECK_THROWS_AS(fit(driver, x, y, Tensor{}, Tensor{}, opt, 1), ConfigError);
}

} // TEST_SUITE
