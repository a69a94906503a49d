#include "tracecast/errors.hpp"
#include "tracecast/graphnet.hpp"

#include "doctest.h"
#include "test_helpers.hpp"

#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

using namespace tracecast;
namespace fs = std::filesystem;

namespace {

GraphConfig small_config() {
    GraphConfig c;
    c.embed_dim = 4;
    c.top_k = 2;
    c.lookback = 5;
    c.horizon = 2;
    c.node_count = 6;
    return c;
}

WindowBatch toy_windows(std::size_t count, std::size_t D, std::size_t L,
                        std::size_t H, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    WindowBatch b;
    b.inputs = tchelp::random_tensor({count, D, L}, rng);
    b.targets = tchelp::random_tensor({count, D, H}, rng);
    b.origins.resize(count);
    std::iota(b.origins.begin(), b.origins.end(), L);
    return b;
}

} // namespace

TEST_SUITE("graphnet") {

TEST_CASE("parameter count, small and large") {
    GraphConfig tiny;
    tiny.embed_dim = 2;
    tiny.top_k = 0;
    tiny.lookback = 2;
    tiny.horizon = 1;
    tiny.node_count = 1;
    tiny.input_bias = false;
    // V 1x2, W 2x2, attn 8, head_w 2x1, head_b 1
    CHECK(graph_parameter_count(tiny) == 17);
    tiny.input_bias = true;
    CHECK(graph_parameter_count(tiny) == 19);

    GraphConfig big;
    big.embed_dim = 128;
    big.top_k = 1;
    big.lookback = 10;
    big.horizon = 3;
    big.node_count = 131;
    big.input_bias = false;
    // 131*128 + 10*128 + 4*128 + 128*3 + 3
    CHECK(graph_parameter_count(big) == 18947);
    big.input_bias = true;
    CHECK(graph_parameter_count(big) == 19075);

    GraphModel m = build_graph_model(small_config(), 3);
    CHECK(count_parameters(m) == graph_parameter_count(small_config()));
    std::size_t named = 0;
    for (const auto& [name, t] : named_parameters(m)) named += t->size();
    CHECK(named == count_parameters(m));
}

TEST_CASE("config validation") {
    GraphConfig c = small_config();
    c.top_k = 6;  // == node_count, one too many
    CHECK_THROWS_AS(build_graph_model(c, 1), ConfigError);
    c = small_config();
    c.embed_dim = 0;
    CHECK_THROWS_AS(build_graph_model(c, 1), ConfigError);
}

TEST_CASE("cosine similarity on a hand example") {
    Tensor V({3, 2}, {1, 0, 0.9, 0.1, 0, 1});
    Tensor S = cosine_similarity(V);
    CHECK(S.at(0, 0) == doctest::Approx(1.0));
    CHECK(S.at(1, 1) == doctest::Approx(1.0));
    CHECK(S.at(0, 1) == doctest::Approx(0.9 / std::sqrt(0.82)).epsilon(1e-12));
    CHECK(S.at(0, 1) == doctest::Approx(0.9939).epsilon(1e-4));
    CHECK(S.at(0, 2) == doctest::Approx(0.0));
    CHECK(S.at(1, 2) == doctest::Approx(0.1 / std::sqrt(0.82)).epsilon(1e-12));
    CHECK(S.at(1, 2) == doctest::Approx(0.1104).epsilon(1e-3));
    CHECK(S.at(1, 0) == S.at(0, 1));  // symmetric

    Tensor zero({2, 2}, {1, 1, 0, 0});
    std::string msg;
    try {
        cosine_similarity(zero);
    } catch (const NumericError& e) {
        msg = e.what();
    }
    CHECK(msg.find("node 1") != std::string::npos);
}

TEST_CASE("top-k adjacency keeps the strongest neighbours plus the self-loop") {
    Tensor V({3, 2}, {1, 0, 0.9, 0.1, 0, 1});
    Tensor A = build_adjacency(cosine_similarity(V), 1);
    // expected neighbours: 0 -> 1, 1 -> 0, 2 -> 1
    CHECK(A.values() == std::vector<double>{1, 1, 0, 1, 1, 0, 0, 1, 1});
}

TEST_CASE("adjacency row degree is min(top_k, D-1) + 1 with a unit diagonal") {
    std::mt19937_64 rng(13);
    for (std::size_t D : {1ul, 2ul, 5ul, 9ul}) {
        Tensor V = tchelp::random_tensor({D, 3}, rng);
        Tensor S = cosine_similarity(V);
        for (std::size_t k : {0ul, 1ul, 3ul, D - 1}) {
            if (k > D - 1) continue;
            Tensor A = build_adjacency(S, k);
            for (std::size_t i = 0; i < D; ++i) {
                CHECK(A.at(i, i) == 1.0);
                double degree = 0.0;
                for (std::size_t j = 0; j < D; ++j) {
                    CHECK((A.at(i, j) == 0.0 || A.at(i, j) == 1.0));
                    degree += A.at(i, j);
                }
                CHECK(degree == double(std::min(k, D - 1) + 1));
            }
        }
        CHECK_THROWS_AS(build_adjacency(S, D), ConfigError);
    }
}

TEST_CASE("ties go to the lower index") {
    // node 0 is equally similar to nodes 1 and 2
    Tensor S({3, 3}, {1, 0.5, 0.5, 0.5, 1, 0.2, 0.5, 0.2, 1});
    Tensor A = build_adjacency(S, 1);
    CHECK(A.at(0, 1) == 1.0);
    CHECK(A.at(0, 2) == 0.0);
}

TEST_CASE("forward matches a plain-loop reimplementation") {
    std::mt19937_64 rng(31);
    double worst = 0.0;
    std::size_t instances = 0;
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        GraphConfig c = small_config();
        c.input_bias = seed % 2 == 0;
        GraphModel m = build_graph_model(c, seed);
        SensorGraph g = derive_graph(m);
        Tensor x = tchelp::random_tensor({5, c.node_count, c.lookback}, rng);

        Tensor want = tchelp::gnn_forward_oracle(m, g.adjacency, x);
        Tensor got = graph_predict(m, g.adjacency, x);
        REQUIRE(got.shape() == want.shape());
        worst = std::max(worst, tchelp::max_abs_diff(want, got));
        instances += x.dim(0) * c.node_count;
    }
    CHECK(worst < 1e-10);
    CHECK(instances >= 100);
    MESSAGE("graph forward oracle max abs diff ", worst, " over ", instances,
            " node-instances");
}

TEST_CASE("staged forwards compose to the full prediction") {
    GraphModel m = build_graph_model(small_config(), 5);
    SensorGraph g = derive_graph(m);
    std::mt19937_64 rng(6);
    Tensor x = tchelp::random_tensor({3, 6, 5}, rng);

    auto [z, alpha] = attention_forward(m, g.adjacency, x);
    CHECK(z.shape() == std::vector<std::size_t>{3, 6, 4});
    CHECK(alpha.shape() == std::vector<std::size_t>{3, 6, 6});
    Tensor full = graph_predict(m, g.adjacency, x);
    Tensor staged = forecast(m, z);
    // the staged head is a scalar loop, so only summation order differs
    CHECK(tchelp::max_abs_diff(full, staged) < 1e-12);

    // attention rows are a distribution over the adjacency support
    for (std::size_t b = 0; b < 3; ++b)
        for (std::size_t i = 0; i < 6; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < 6; ++j) {
                if (g.adjacency.at(i, j) == 0.0) CHECK(alpha.at(b, i, j) == 0.0);
                row += alpha.at(b, i, j);
            }
            CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
        }
}

TEST_CASE("node order does not matter beyond relabeling") {
    GraphConfig c = small_config();
    GraphModel m = build_graph_model(c, 8);
    std::mt19937_64 rng(44);
    Tensor x = tchelp::random_tensor({2, 6, 5}, rng);

    const std::vector<std::size_t> perm = {3, 0, 5, 1, 4, 2};
    GraphModel pm = m;
    Tensor px({2, 6, 5});
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t e = 0; e < 4; ++e)
            pm.V.at(i, e) = m.V.at(perm[i], e);
        for (std::size_t b = 0; b < 2; ++b)
            for (std::size_t l = 0; l < 5; ++l)
                px.at(b, i, l) = x.at(b, perm[i], l);
    }

    Tensor base = graph_predict(m, derive_graph(m).adjacency, x);
    Tensor permuted = graph_predict(pm, derive_graph(pm).adjacency, px);
    double worst = 0.0;
    for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t h = 0; h < 2; ++h)
                worst = std::max(worst, std::fabs(permuted.at(b, i, h) -
                                                  base.at(b, perm[i], h)));
    CHECK(worst < 1e-10);
}

TEST_CASE("gradients agree with finite differences under a frozen adjacency") {
    GraphConfig c;
    c.embed_dim = 3;
    c.top_k = 1;
    c.lookback = 4;
    c.horizon = 2;
    c.node_count = 3;
    GraphModel m = build_graph_model(c, 12);
    SensorGraph g = derive_graph(m);
    std::mt19937_64 rng(14);
    Tensor x = tchelp::random_tensor({3, 3, 4}, rng);
    Tensor y = tchelp::random_tensor({3, 3, 2}, rng);

    tchelp::GradCheck gc = tchelp::graph_grad_check(m, g.adjacency, x, y);
    CHECK(gc.max_rel_err < 1e-4);
    CHECK(gc.elements == graph_parameter_count(c));
    MESSAGE("graph fd max rel err ", gc.max_rel_err, " over ", gc.elements,
            " elements");
}

TEST_CASE("training runs deterministically and improves the loss") {
    GraphConfig c;
    c.embed_dim = 6;
    c.top_k = 1;
    c.lookback = 6;
    c.horizon = 2;
    c.node_count = 3;

    // forecastable content: sinusoids over a shared clock
    const std::size_t M = 150;
    Tensor rows({M, 3});
    for (std::size_t r = 0; r < M; ++r)
        for (std::size_t d = 0; d < 3; ++d)
            rows.at(r, d) = 0.5 + 0.4 * std::sin(0.3 * double(r) + double(d));
    WindowBatch all = windowize(rows, c.lookback, c.horizon);
    auto [train, val] = validation_sample(all, 0.1, 2);

    TrainOptions opt;
    opt.max_epochs = 20;
    opt.batch_size = 32;
    opt.lr = 0.01;

    GraphTraining a = train_graph(train, val, c, opt, 42);
    CHECK(a.result.epochs_run >= 1);
    CHECK(a.result.best_val < a.result.val_history.front());
    CHECK(a.graph.adjacency.dim(0) == 3);

    GraphTraining b = train_graph(train, val, c, opt, 42);
    CHECK(a.model.V.values() == b.model.V.values());  // bitwise
    GraphTraining other = train_graph(train, val, c, opt, 43);
    CHECK(a.model.V.values() != other.model.V.values());
}

TEST_CASE("training takes its geometry from the batch") {
    // the config's lookback/horizon/node_count are placeholders; the windows
    // decide, and only embed_dim, top_k, bias and slope carry over
    GraphConfig c = small_config();
    WindowBatch train = toy_windows(8, 4, 5, 2, 1);
    WindowBatch val = toy_windows(2, 4, 5, 2, 2);
    TrainOptions opt;
    opt.max_epochs = 1;
    GraphTraining out = train_graph(train, val, c, opt, 1);
    CHECK(out.model.config.node_count == 4);
    CHECK(out.model.config.lookback == 5);
    CHECK(out.model.config.horizon == 2);
    CHECK(out.model.config.embed_dim == c.embed_dim);
}

TEST_CASE("training rejects inputs and targets of different widths") {
    GraphConfig c = small_config();
    WindowBatch train = toy_windows(8, 4, 5, 2, 1);
    std::mt19937_64 rng(9);
    train.targets = tchelp::random_tensor({8, 3, 2}, rng);  // 3 vs 4 variables
    WindowBatch val = toy_windows(2, 4, 5, 2, 2);
    TrainOptions opt;
    opt.max_epochs = 1;
    CHECK_THROWS_AS(train_graph(train, val, c, opt, 1), ShapeError);
}

TEST_CASE("checkpoint carries the model and the derived adjacency") {
    GraphModel m = build_graph_model(small_config(), 77);
    SensorGraph g = derive_graph(m);
    Checkpoint ck = to_checkpoint(m, g);
    CHECK(ck.seed == 77);
    CHECK(ck.has_tensor("adjacency"));
    CHECK(ck.tensor("adjacency").values() == g.adjacency.values());

    GraphModel back = graph_from_checkpoint(ck);
    CHECK(back.config.node_count == 6);
    CHECK(back.config.top_k == 2);
    CHECK(back.V.values() == m.V.values());

    std::mt19937_64 rng(3);
    Tensor x = tchelp::random_tensor({2, 6, 5}, rng);
    CHECK(graph_predict(back, g.adjacency, x).values() ==
          graph_predict(m, g.adjacency, x).values());  // bitwise

    ck.descriptor = R"({"kind":"nbeats"})";
    CHECK_THROWS_AS(graph_from_checkpoint(ck), DataError);
}

TEST_CASE("adjacency export lists off-diagonal edges with similarities") {
    Tensor V({3, 2}, {1, 0, 0.9, 0.1, 0, 1});
    SensorGraph g;
    g.similarity = cosine_similarity(V);
    g.adjacency = build_adjacency(g.similarity, 1);

    const fs::path p = fs::temp_directory_path() / "adjacency_edges.csv";
    export_adjacency_csv(g, {"a", "b", "c"}, p.string());
    std::ifstream f(p);
    std::string line;
    std::getline(f, line);
    CHECK(line == "source,target,similarity");
    std::vector<std::string> lines;
    while (std::getline(f, line)) lines.push_back(line);
    REQUIRE(lines.size() == 3);  // one neighbour per node, self-loops omitted
    CHECK(lines[0].rfind("a,b,", 0) == 0);
    CHECK(lines[1].rfind("b,a,", 0) == 0);
    CHECK(lines[2].rfind("c,b,", 0) == 0);
    fs::remove(p);

    CHECK_THROWS_AS(export_adjacency_csv(g, {"a", "b"}, p.string()), ShapeError);
}

} // TEST_SUITE
