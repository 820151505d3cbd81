// Parallel trial fan-out against the serial reference on the scaling benchmark.

#include "vre/calibration.hpp"
#include "vre/deployer.hpp"

#include <benchmark/benchmark.h>

namespace {

vre::deploy::BenchmarkConfig config(int trials) {
   const auto& fx = vre::calib::default_calibration();
   vre::deploy::BenchmarkConfig c;
   c.scales = {1, 2, 4, 8};
   c.trials = trials;
   c.strategies = {fx.strategy(vre::spec::Strategy::decentralized), fx.strategy(vre::spec::Strategy::centralized)};
   c.profile = fx.profile("openstack-sim");
   c.seed = 7;
   return c;
}

void BM_parallel(benchmark::State& state) {
   auto c = config(int(state.range(0)));
   for (auto _ : state) benchmark::DoNotOptimize(vre::deploy::run_scaling_benchmark(c));
}

void BM_serial(benchmark::State& state) {
   auto c = config(int(state.range(0)));
   for (auto _ : state) benchmark::DoNotOptimize(vre::deploy::run_scaling_benchmark_serial(c));
}

}

BENCHMARK(BM_parallel)->Arg(5)->Arg(50)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_serial)->Arg(5)->Arg(50)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
