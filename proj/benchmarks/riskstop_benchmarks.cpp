#include <benchmark/benchmark.h>

#include "riskstop/continuous.hpp"
#include "riskstop/discrete.hpp"
#include "riskstop/markov.hpp"
#include "riskstop/simulation.hpp"
#include "support.hpp"

using namespace riskstop;

namespace {

MarkovModel ctmc(std::size_t n) {
  std::mt19937_64 rng(n);
  return riskstop::testing::random_ctmc(rng, n);
}

MarkovModel dtmc(std::size_t n) {
  std::mt19937_64 rng(n);
  return riskstop::testing::random_dtmc(rng, n);
}

void BM_WeightedTransitionMatrix(benchmark::State& state) {
  const auto m = ctmc(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(weighted_transition_matrix(m.kernel, m.costs.g, 0.5));
}
BENCHMARK(BM_WeightedTransitionMatrix)->Arg(4)->Arg(16)->Arg(64);

void BM_SolveFixedPoint(benchmark::State& state) {
  const auto m = dtmc(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_fixed_point(m, {.tol = 1e-10}));
}
BENCHMARK(BM_SolveFixedPoint)->Arg(4)->Arg(32)->Arg(256);

void BM_OracleEnumerate(benchmark::State& state) {
  const auto m = dtmc(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(oracle_enumerate(m));
}
BENCHMARK(BM_OracleEnumerate)->Arg(6)->Arg(10);

void BM_DyadicBackward(benchmark::State& state) {
  const auto m = ctmc(6);
  const int level = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(dyadic_backward(m.kernel, m.costs, 4.0, level, Bound::Lower));
}
BENCHMARK(BM_DyadicBackward)->Arg(8)->Arg(12)->Arg(16);

void BM_SolveInfinite(benchmark::State& state) {
  const auto m = ctmc(6);
  for (auto _ : state) benchmark::DoNotOptimize(solve_infinite(m.kernel, m.costs, {.tol = 1e-4}));
}
BENCHMARK(BM_SolveInfinite)->Unit(benchmark::kMillisecond);

void BM_EvaluateRegionPolicy(benchmark::State& state) {
  const auto m = dtmc(6);
  const auto region = solve_fixed_point(m).region;
  const auto x0 = region.complement().empty() ? 0 : region.complement().front();
  for (auto _ : state)
    benchmark::DoNotOptimize(evaluate_region_policy(m, region, x0, {.n_paths = 10000, .seed = 1}));
}
BENCHMARK(BM_EvaluateRegionPolicy)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
