#include "tracecast/detector.hpp"
#include "tracecast/graphnet.hpp"
#include "tracecast/nbeats.hpp"
#include "tracecast/tape.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace tracecast;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
    return t;
}

void BM_MatMulForward(benchmark::State& state) {
    std::size_t n = static_cast<std::size_t>(state.range(0));
    Tensor a = random_tensor({n, n}, 1);
    Tensor b = random_tensor({n, n}, 2);
    for (auto _ : state) {
        Tape tape;
        auto out = tape.matmul(tape.leaf(a, "a"), tape.leaf(b, "b"));
        benchmark::DoNotOptimize(tape.value(out).data());
    }
}
BENCHMARK(BM_MatMulForward)->Arg(32)->Arg(64)->Arg(128);

void BM_MatMulBackward(benchmark::State& state) {
    std::size_t n = static_cast<std::size_t>(state.range(0));
    Tensor a = random_tensor({n, n}, 1);
    Tensor b = random_tensor({n, n}, 2);
    for (auto _ : state) {
        Tape tape;
        auto out = tape.matmul(tape.leaf(a, "a"), tape.leaf(b, "b"));
        auto loss = tape.sum_all(out);
        tape.backward(loss);
        benchmark::DoNotOptimize(tape.grad(out).data());
    }
}
BENCHMARK(BM_MatMulBackward)->Arg(32)->Arg(64)->Arg(128);

void BM_NBeatsForward(benchmark::State& state) {
    std::size_t batch = static_cast<std::size_t>(state.range(0));
    NBeatsConfig cfg;
    cfg.lookback = 50;
    cfg.horizon = 10;
    NBeatsModel model = build_nbeats(cfg, 7);
    Tensor x = random_tensor({batch, cfg.lookback}, 3);
    for (auto _ : state) {
        auto [fore, residual] = nbeats_predict(model, x);
        benchmark::DoNotOptimize(fore.data());
        benchmark::DoNotOptimize(residual.data());
    }
}
BENCHMARK(BM_NBeatsForward)->Arg(8)->Arg(32)->Arg(128);

void BM_GraphForward(benchmark::State& state) {
    std::size_t batch = static_cast<std::size_t>(state.range(0));
    GraphConfig cfg;
    cfg.lookback = 50;
    cfg.horizon = 10;
    cfg.node_count = 16;
    cfg.top_k = 3;
    GraphModel model = build_graph_model(cfg, 7);
    SensorGraph graph = derive_graph(model);
    Tensor x = random_tensor({batch, cfg.node_count, cfg.lookback}, 3);
    for (auto _ : state) {
        Tensor fore = graph_predict(model, graph.adjacency, x);
        benchmark::DoNotOptimize(fore.data());
    }
}
BENCHMARK(BM_GraphForward)->Arg(8)->Arg(32)->Arg(128);

void BM_Aggregate(benchmark::State& state) {
    std::size_t count = static_cast<std::size_t>(state.range(0));
    std::size_t horizon = 20;
    std::vector<std::size_t> origins(count);
    for (std::size_t i = 0; i < count; ++i) origins[i] = 100 + i;
    Tensor forecasts = random_tensor({count, 16, horizon}, 5);
    ForecastSet fs = make_forecast_set(origins, forecasts);
    for (auto _ : state) {
        AggregatedForecast agg = aggregate(fs);
        benchmark::DoNotOptimize(agg.estimates.data());
    }
}
BENCHMARK(BM_Aggregate)->Arg(128)->Arg(512);

} // namespace

BENCHMARK_MAIN();
