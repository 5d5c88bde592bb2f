#include "dpne/cluster_eval.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

void BM_KMeans(benchmark::State& state) {
  const auto n = state.range(0);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  dpne::Matrix h(n, 10);
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    for (Eigen::Index j = 0; j < h.cols(); ++j) h(i, j) = normal(rng) + 4.0 * static_cast<double>((i % 10) == j);
  }
  for (auto _ : state) benchmark::DoNotOptimize(dpne::kmeans_pp(h, 10, 10, 1));
}
BENCHMARK(BM_KMeans)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_Metrics(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> label(0, 9);
  std::vector<int> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = label(rng);
    b[i] = (i % 3 == 0) ? label(rng) : a[i];
  }
  const auto pa = dpne::Partition::from_labels(a);
  const auto pb = dpne::Partition::from_labels(b);
  for (auto _ : state) benchmark::DoNotOptimize(dpne::evaluate(pa, pb));
}
BENCHMARK(BM_Metrics)->Arg(1000)->Arg(70000);

}  // namespace
