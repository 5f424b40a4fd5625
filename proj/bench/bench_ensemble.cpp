// Serial reference against the OpenMP kernel on the same ensembles.
#include <benchmark/benchmark.h>

#include "htd/diagnostics.hpp"

namespace {

using namespace htd;

const TargetDensity& density() {
  static const TargetDensity d = make_density(DensityModel{});
  return d;
}

void run_checkpoints(benchmark::State& state, Exec exec, bool accelerated) {
  const auto& d = density();
  const ProcessSpec spec = accelerated ? accelerated_spec(d, speed_function(d)) : langevin_spec(d);
  const std::vector<double> checkpoints{0.5, 1.0, 2.0};
  EnsembleOptions opt;
  opt.size = static_cast<std::size_t>(state.range(0));
  opt.seed = 7;
  opt.exec = exec;
  const StepPolicy policy = StepPolicy::adaptive_scale(1e-2, 1e-3);
  std::uint64_t steps = 0;
  for (auto _ : state) {
    const auto cs = checkpoint_states(spec, InitialLaw::fixed(10.0), checkpoints, policy, opt);
    steps += cs.stats.steps;
    benchmark::DoNotOptimize(cs.states.back().data());
  }
  state.counters["steps/s"] = benchmark::Counter(static_cast<double>(steps), benchmark::Counter::kIsRate);
}

void run_hitting(benchmark::State& state, Exec exec) {
  const auto& d = density();
  const ProcessSpec spec = accelerated_spec(d, speed_function(d));
  EnsembleOptions opt;
  opt.size = static_cast<std::size_t>(state.range(0));
  opt.seed = 11;
  opt.exec = exec;
  const StepPolicy policy = StepPolicy::adaptive_scale(1e-2, 1e-3);
  for (auto _ : state) {
    const auto hs = hitting_times(spec, InitialLaw::fixed(10.0), 1.0, 5.0, policy, opt);
    benchmark::DoNotOptimize(hs.times.data());
  }
}

void BM_AcceleratedSerial(benchmark::State& s) { run_checkpoints(s, Exec::Serial, true); }
void BM_AcceleratedParallel(benchmark::State& s) { run_checkpoints(s, Exec::Parallel, true); }
void BM_LangevinSerial(benchmark::State& s) { run_checkpoints(s, Exec::Serial, false); }
void BM_LangevinParallel(benchmark::State& s) { run_checkpoints(s, Exec::Parallel, false); }
void BM_HittingSerial(benchmark::State& s) { run_hitting(s, Exec::Serial); }
void BM_HittingParallel(benchmark::State& s) { run_hitting(s, Exec::Parallel); }

BENCHMARK(BM_AcceleratedSerial)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AcceleratedParallel)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LangevinSerial)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LangevinParallel)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HittingSerial)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HittingParallel)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
