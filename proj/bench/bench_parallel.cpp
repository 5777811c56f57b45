// Serial reference loops against the OpenMP path on the three replicate-heavy kernels.

#include <benchmark/benchmark.h>

#include <vector>

#include "glp/calibrate.hpp"
#include "glp/models/cmp.hpp"
#include "glp/models/random_walk.hpp"

using namespace glp;

namespace {

Parallelism mode(const benchmark::State& state) {
  return state.range(0) == 0 ? Parallelism{Execution::serial, 1} : Parallelism{Execution::parallel, 0};
}

void BM_SimulateLifetimes(benchmark::State& state) {
  const std::vector<int> sites{51};
  for (auto _ : state) {
    auto data = rw::simulate_dataset({1.0, 0.001, 0.5}, rw::Lattice{101}, sites, 1000, RngStream(1), 100'000'000,
                                     mode(state));
    benchmark::DoNotOptimize(data.lifetimes().data());
  }
}

void BM_CalibrateCmp(benchmark::State& state) {
  const cmp::CmpModel model(2000);
  RngStream s(2);
  const Objective observed = model.simulate_loss(std::vector<double>{4.0, 2.0}, s);
  const OptimResult mgle = fit_mgle(observed, model.space(), OptimizerConfig{});
  const std::vector<ProfileGrid> grids{ProfileGrid::regular(model.space(), InterestPartition(2, {0}), 100),
                                       ProfileGrid::regular(model.space(), InterestPartition(2, {1}), 100)};
  CalibrationConfig config;
  config.K = 50;
  for (auto _ : state) {
    auto r = calibrate_from_mgle(model, mgle, grids, config, OptimizerConfig{}, mode(state));
    benchmark::DoNotOptimize(r.front().delta_star);
  }
}

void BM_CoverageRandomWalk(benchmark::State& state) {
  rw::RandomWalkSetup setup;
  setup.lattice = rw::Lattice{21};
  setup.m = 200;
  setup.variance_resamples = 50;
  const rw::RandomWalkModel model(setup);
  const std::vector<double> truth{0.002, 0.5};
  const std::vector<double> alphas{0.05, 0.5};
  for (auto _ : state) {
    auto r = validate_coverage(model, truth, InterestPartition(2, {1}), 1.0, alphas, 24, OptimizerConfig{}, 3,
                               mode(state));
    benchmark::DoNotOptimize(r.observed.data());
  }
}

}  // namespace

// Argument 0 runs the serial reference, 1 the OpenMP path.
BENCHMARK(BM_SimulateLifetimes)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CalibrateCmp)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CoverageRandomWalk)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
