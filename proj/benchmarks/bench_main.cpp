#include <benchmark/benchmark.h>

#include "sccovert/analytical.hpp"
#include "sccovert/covert.hpp"
#include "sccovert/extraction.hpp"
#include "sccovert/transient.hpp"

using namespace sccovert;

static void BM_AnalyticalFsl(benchmark::State& state) {
  const auto spec = ConverterSpec::uniform(static_cast<std::size_t>(state.range(0)), 1.0, 0.1, 1e-6, 1e-5, 0.01, 10e6);
  for (auto _ : state) benchmark::DoNotOptimize(r_matrix(spec, Regime::fsl));
}
BENCHMARK(BM_AnalyticalFsl)->Arg(3)->Arg(8)->Arg(32);

static void BM_TransientPeriod(benchmark::State& state) {
  TransientSimulator sim(build_ladder(three_stage_reference()), resistive_loads({1, 100, 100}),
                         StepPolicy{static_cast<int>(state.range(0))});
  for (auto _ : state) benchmark::DoNotOptimize(sim.run_period());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TransientPeriod)->Arg(512)->Arg(2048);

static void BM_SettlePeriodic(benchmark::State& state) {
  const auto net = build_ladder(three_stage_reference());
  for (auto _ : state) {
    TransientSimulator sim(net, resistive_loads({1, 100, 100}));
    sim.settle_periodic();
    benchmark::DoNotOptimize(sim.time());
  }
}
BENCHMARK(BM_SettlePeriodic)->Unit(benchmark::kMillisecond);

static void BM_Extraction(benchmark::State& state) {
  const auto net = build_ladder(three_stage_reference());
  for (auto _ : state) benchmark::DoNotOptimize(extract_r_matrix(net));
}
BENCHMARK(BM_Extraction)->Unit(benchmark::kMillisecond);

static void BM_Transmit(benchmark::State& state) {
  const auto net = build_ladder(three_stage_reference());
  ChannelConfig c;
  for (auto _ : state) benchmark::DoNotOptimize(transmit(net, c));
}
BENCHMARK(BM_Transmit)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
