#include <benchmark/benchmark.h>

#include "jmmle/jmmle.hpp"
#include "jmmle/simulate.hpp"

using namespace jmmle;

// The estimation design at (p, q, n) = (60, 30, 100), K = 5; range(0) = 1 for one-step.
static void BM_Fit(benchmark::State& state) {
    SimConfig sc;
    sc.seed = 1;
    const auto sim = gen_estimation_dataset(sc);
    JmmleConfig cfg;
    cfg.one_step = state.range(0) == 1;
    cfg.fit_upper = false;
    cfg.workers = 1;
    for (auto _ : state) benchmark::DoNotOptimize(fit(sim.data, sim.groups, cfg).B.data());
}
BENCHMARK(BM_Fit)->Arg(1)->Arg(0)->Unit(benchmark::kSecond)->Iterations(1);

static void BM_SimulateEstimation(benchmark::State& state) {
    SimConfig sc;
    for (auto _ : state) {
        ++sc.seed;
        benchmark::DoNotOptimize(gen_estimation_dataset(sc).data.n());
    }
}
BENCHMARK(BM_SimulateEstimation)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
