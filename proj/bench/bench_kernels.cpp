// Parallel kernels against their serial references.
//
//   ./build/bench/bench_kernels --benchmark_filter=Study

#include <benchmark/benchmark.h>

#include <omp.h>

#include "survquack/infer.hpp"
#include "survquack/sim.hpp"

using namespace survquack;

namespace {

const ResolvedScenario& section3()
{
    static const ResolvedScenario r = [] {
        ScenarioConfig c = build_section3_scenario();
        c.replications = 200;
        return resolve(c);
    }();
    return r;
}

void BM_StudySerial(benchmark::State& state)
{
    for (auto _ : state) benchmark::DoNotOptimize(run_study_serial(section3()));
    state.SetItemsProcessed(state.iterations() * 200);
}

void BM_StudyParallel(benchmark::State& state)
{
    const int workers = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(run_study(section3(), workers));
    state.SetItemsProcessed(state.iterations() * 200);
}

void BM_NullTableSerial(benchmark::State& state)
{
    const auto grid = default_theta_grid();
    for (auto _ : state) benchmark::DoNotOptimize(build_mw_null_table_serial(50, 50, grid, 2000, 1));
}

void BM_NullTableParallel(benchmark::State& state)
{
    const auto grid = default_theta_grid();
    const int workers = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(build_mw_null_table(50, 50, grid, 2000, 1, workers));
}

void worker_counts(benchmark::internal::Benchmark* b)
{
    for (int w = 1; w <= omp_get_num_procs(); w *= 2) b->Arg(w);
    if ((omp_get_num_procs() & (omp_get_num_procs() - 1)) != 0) b->Arg(omp_get_num_procs());
}

} // namespace

BENCHMARK(BM_StudySerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StudyParallel)->Apply(worker_counts)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_NullTableSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NullTableParallel)->Apply(worker_counts)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
