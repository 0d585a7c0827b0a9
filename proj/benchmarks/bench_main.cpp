#include <benchmark/benchmark.h>

#include "edgetune/cbo.hpp"
#include "edgetune/device_sim.hpp"
#include "edgetune/perf_model.hpp"
#include "edgetune/sched_sim.hpp"
#include "edgetune/workload.hpp"

using namespace edgetune;

namespace {

const DeviceProfile& orin() {
    static const DeviceProfile p = builtin_profile("synthetic-orin");
    return p;
}

void BM_Measure(benchmark::State& state) {
    const DeviceProfile& p = orin();
    const HardwareConfig c = p.default_max_config();
    RngStream rng(1);
    for (auto _ : state) benchmark::DoNotOptimize(measure(p, c, rng));
}
BENCHMARK(BM_Measure);

void BM_NoiselessGridSweep(benchmark::State& state) {
    const DeviceProfile& p = orin();
    for (auto _ : state)
        benchmark::DoNotOptimize(
            noiseless_grid_optimum(p, std::numeric_limits<double>::infinity()));
}
BENCHMARK(BM_NoiselessGridSweep)->Unit(benchmark::kMillisecond);

void BM_GpFit(benchmark::State& state) {
    const auto n = state.range(0);
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    RngStream gen(3);
    for (long i = 0; i < n; ++i) {
        xs.push_back({gen.uniform(), gen.uniform(), gen.uniform()});
        ys.push_back(std::sin(5 * xs.back()[0]) + xs.back()[1] + 0.05 * gen.gaussian());
    }
    for (auto _ : state) {
        RngStream rng(9);
        benchmark::DoNotOptimize(GpModel::fit(xs, ys, 8, rng));
    }
}
BENCHMARK(BM_GpFit)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_AcquisitionSweep(benchmark::State& state) {
    std::vector<std::vector<double>> xs;
    std::vector<double> energy, latency;
    RngStream gen(5);
    for (int i = 0; i < 20; ++i) {
        xs.push_back({gen.uniform(), gen.uniform(), gen.uniform()});
        energy.push_back(60.0 + 20.0 * gen.uniform());
        latency.push_back(10.0 + 30.0 * gen.uniform());
    }
    RngStream f1(1), f2(2);
    const GpModel ge = GpModel::fit(xs, energy, 8, f1);
    const GpModel gl = GpModel::fit(xs, latency, 8, f2);
    std::vector<std::vector<double>> candidates;
    for (int i = 0; i < 455; ++i)
        candidates.push_back({gen.uniform(), gen.uniform(), gen.uniform()});
    const CboSettings settings;
    for (auto _ : state) {
        double best = -1.0;
        for (const auto& c : candidates)
            best = std::max(best, acquisition(ge, gl, c, 65.0, settings, 30.0));
        benchmark::DoNotOptimize(best);
    }
}
BENCHMARK(BM_AcquisitionSweep)->Unit(benchmark::kMillisecond);

void BM_NnlsFit(benchmark::State& state) {
    const DeviceProfile& p = orin();
    RngStream rng(7);
    const auto [rows, lats] = collect_training_samples(p, 30, rng);
    for (auto _ : state) benchmark::DoNotOptimize(nnls_fit(rows, lats));
}
BENCHMARK(BM_NnlsFit);

void BM_SimulatePoisson30s(benchmark::State& state) {
    const DeviceProfile& p = orin();
    const GridSearchResult tuned = noiseless_grid_optimum(p, 700.0);
    RngStream arr(11);
    const ArrivalStream stream = poisson_stream(8.0, 30.0, arr);
    for (auto _ : state) {
        RngStream rng(13);
        benchmark::DoNotOptimize(simulate(p, tuned.best_config, stream, p.default_finetune,
                                          SchedulerPolicy::greedy(), 700.0, 30.0, rng));
    }
}
BENCHMARK(BM_SimulatePoisson30s)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
