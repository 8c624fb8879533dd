#include <benchmark/benchmark.h>

#include "clockopt/noise.hpp"
#include "clockopt/protocols.hpp"
#include "clockopt/simulator.hpp"
#include "clockopt/symstate.hpp"

using namespace clockopt;

static void BM_CollectiveRotation(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(collective_rotation(n, 0.7));
}
BENCHMARK(BM_CollectiveRotation)->Arg(2)->Arg(8)->Arg(16)->Arg(64);

static void BM_FlickerTrace(benchmark::State& state)
{
    const auto cycles = static_cast<std::size_t>(state.range(0));
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(generate_flicker(cycles, seed++));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_FlickerTrace)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

static void BM_RunClock(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0));
    const auto p = buzek_protocol(n, false, 0.05);
    const auto trace = generate_flicker(100000, 1);
    for (auto _ : state) benchmark::DoNotOptimize(simulate_instability(p, trace, 100000, 2));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 100000);
}
BENCHMARK(BM_RunClock)->Arg(1)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
