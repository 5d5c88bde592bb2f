#include "dpne/network.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

dpne::Matrix unit_batch(Eigen::Index rows, Eigen::Index cols) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  dpne::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

// Args: batch size, then 0 for 784-500-500-2000-10 or 1 for 784-256-64-10.
const dpne::LayerSizes& sizes(int which) {
  static const dpne::LayerSizes deep = dpne::LayerSizes::mirrored({784, 500, 500, 2000, 10});
  static const dpne::LayerSizes small = dpne::LayerSizes::mirrored({784, 256, 64, 10});
  return which == 0 ? deep : small;
}

void BM_Forward(benchmark::State& state) {
  const auto params = dpne::NetworkParams::random(sizes(static_cast<int>(state.range(1))), 1);
  const dpne::Matrix x = unit_batch(state.range(0), 784);
  for (auto _ : state) benchmark::DoNotOptimize(dpne::forward(params, x));
}
BENCHMARK(BM_Forward)->ArgsProduct({{100, 1000}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& state) {
  const auto params = dpne::NetworkParams::random(sizes(static_cast<int>(state.range(1))), 1);
  const dpne::Matrix x = unit_batch(state.range(0), 784);
  for (auto _ : state) {
    const dpne::ForwardCache cache = dpne::forward(params, x);
    benchmark::DoNotOptimize(dpne::backprop(params, cache, x));
  }
}
BENCHMARK(BM_ForwardBackward)->ArgsProduct({{100, 1000}, {0, 1}})->Unit(benchmark::kMillisecond);

}  // namespace
