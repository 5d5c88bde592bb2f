#include "dpne/density.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

dpne::Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  dpne::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

void BM_HighConditionals(benchmark::State& state) {
  const dpne::Matrix x = gaussian(state.range(0), 100, 1);
  for (auto _ : state) benchmark::DoNotOptimize(dpne::high_conditionals(x, 10));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_HighConditionals)->RangeMultiplier(2)->Range(128, 1024)->Complexity();

void BM_CalibrateBandwidths(benchmark::State& state) {
  const dpne::Matrix h = gaussian(state.range(0), 10, 2);
  for (auto _ : state) benchmark::DoNotOptimize(dpne::calibrate_bandwidths(h, 20.0));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_CalibrateBandwidths)->RangeMultiplier(2)->Range(128, 1024)->Complexity();

// One fine-tuning step's worth of embedding-space work.
void BM_PreservationGradient(benchmark::State& state) {
  const auto n = state.range(0);
  const dpne::Affinity p = dpne::high_conditionals(gaussian(n, 100, 3), 10);
  const dpne::Matrix h = gaussian(n, 10, 4);
  for (auto _ : state) {
    const dpne::BandwidthVector b = dpne::calibrate_bandwidths(h, 20.0);
    const dpne::Affinity q = dpne::low_conditionals(h, b);
    benchmark::DoNotOptimize(dpne::dp_gradient(p, q, h, b));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_PreservationGradient)->RangeMultiplier(2)->Range(128, 1024)->Complexity();

}  // namespace
