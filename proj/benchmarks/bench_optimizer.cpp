#include <benchmark/benchmark.h>

#include <random>

#include "sectorllm/diagnostics.hpp"
#include "sectorllm/llm_gateway.hpp"
#include "sectorllm/optimizer.hpp"

namespace {

using namespace sectorllm;

/// Daily-scale moments from a three-factor model.
MomentModel synthetic_moments(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd load(n, 3);
  for (Eigen::Index i = 0; i < load.size(); ++i) load.data()[i] = 0.01 * z(rng);
  MomentModel m;
  for (int i = 0; i < n; ++i) m.tickers.push_back("S" + std::to_string(i));
  m.Q = load * load.transpose();
  m.Q.diagonal().array() += 1e-4;
  m.mu.resize(n);
  for (int i = 0; i < n; ++i) m.mu[i] = 4e-4 + 3e-4 * z(rng);
  return m;
}

void BM_SolveMinVariance(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto m = synthetic_moments(n, 11);
  const auto b = weight_bounds(n);
  const double lo = m.mu.dot(solve_min_variance(m, kNoReturnTarget, b).weights);
  const double hi = m.mu.dot(max_return_weights(m, b));
  const double target = lo + 0.6 * (hi - lo);
  for (auto _ : state) benchmark::DoNotOptimize(solve_min_variance(m, target, b));
}
BENCHMARK(BM_SolveMinVariance)->Arg(5)->Arg(10)->Arg(20);

void BM_TraceFrontier(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto m = synthetic_moments(n, 12);
  const auto b = weight_bounds(n);
  for (auto _ : state) benchmark::DoNotOptimize(trace_frontier(m, b, 50, 7.9e-5));
}
BENCHMARK(BM_TraceFrontier)->Arg(10)->Arg(20);

void BM_EffectiveRank(benchmark::State& state) {
  const auto m = synthetic_moments(static_cast<int>(state.range(0)), 13);
  for (auto _ : state) benchmark::DoNotOptimize(effective_rank(m.Q));
}
BENCHMARK(BM_EffectiveRank)->Arg(20);

void BM_ParseWeightString(benchmark::State& state) {
  std::string text;
  for (int i = 0; i < 20; ++i) text += (i ? ", S" : "S") + std::to_string(i) + ": 0.05";
  for (auto _ : state) benchmark::DoNotOptimize(parse_weight_string(text));
}
BENCHMARK(BM_ParseWeightString);

}  // namespace

BENCHMARK_MAIN();
