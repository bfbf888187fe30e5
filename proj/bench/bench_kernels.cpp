// Serial reference vs OpenMP kernels on synthetic feeders of growing size.

#include <benchmark/benchmark.h>

#include "flexgrid/synthgen.hpp"
#include "flexgrid/timeseries.hpp"

namespace {

using namespace flexgrid;

struct Case {
  GridModel grid;
  std::vector<MeasurementFrame> frames;
};

Case make_case(std::size_t buses) {
  FeederSpec spec;
  spec.bus_count = buses;
  spec.r_pu = 0.02 * 7.0 / static_cast<double>(buses);
  spec.x_pu = 0.5 * spec.r_pu;
  GridModel grid = generate_feeder(spec);
  DaySpec day;
  day.with_state = false;
  auto frames = generate_profiles(grid, day);
  return {std::move(grid), std::move(frames)};
}

void BM_Sensitivities(benchmark::State& state, Execution execution) {
  const Case c = make_case(static_cast<std::size_t>(state.range(0)));
  const OperatingPoint op = solve_power_flow(c.grid, c.frames[108].p, c.frames[108].q);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sensitivities_model_based(c.grid, op, 1e-4, execution));
  }
}

void BM_RunSeries(benchmark::State& state, Execution execution) {
  const Case c = make_case(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_series(c.grid, c.frames, {}, execution));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(c.frames.size()));
}

}  // namespace

BENCHMARK_CAPTURE(BM_Sensitivities, serial, Execution::serial)
    ->Arg(7)->Arg(25)->Arg(50)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(BM_Sensitivities, parallel, Execution::parallel)
    ->Arg(7)->Arg(25)->Arg(50)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(BM_RunSeries, serial, Execution::serial)
    ->Arg(7)->Arg(25)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(BM_RunSeries, parallel, Execution::parallel)
    ->Arg(7)->Arg(25)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
