#include <benchmark/benchmark.h>

#include "beaq/acquisition.hpp"
#include "beaq/beta_model.hpp"
#include "beaq/oracle.hpp"

using namespace beaq;

namespace {

SampleTensor pool(std::size_t n, std::size_t m, std::size_t c) {
  oracle::SyntheticPoolSpec spec;
  spec.n_points = n;
  spec.n_draws = m;
  spec.n_classes = c;
  spec.seed = 3;
  return oracle::generate_pool(spec);
}

// args: points, draws, classes
void BM_ScorePoolBalentAcq(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto t = pool(n, static_cast<std::size_t>(state.range(1)), static_cast<std::size_t>(state.range(2)));
  for (auto _ : state) benchmark::DoNotOptimize(score_pool(t, Measure::kBalentAcq, {}, 0, 1));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_ScorePoolBalentAcq)
    ->Args({1000, 100, 10})
    ->Args({2000, 100, 10})
    ->Args({4000, 100, 10})
    ->Args({1000, 100, 100})
    ->Unit(benchmark::kMillisecond);

void BM_ScoreMarginals(benchmark::State& state) {
  const auto measure = static_cast<Measure>(state.range(0));
  const auto marginals = fit_pool(pool(2000, 100, 10), {}, 1);
  for (auto _ : state) benchmark::DoNotOptimize(score_marginals(marginals, measure, {}, 0, 1));
  state.SetLabel(std::string(measure_name(measure)));
  state.SetItemsProcessed(state.iterations() * 2000);
}
// mc_bald and power_bald need the raw draws.
void marginal_measures(benchmark::internal::Benchmark* b) {
  for (Measure m : kAllMeasures) {
    if (m != Measure::kMcBald && m != Measure::kPowerBald) b->Arg(static_cast<int>(m));
  }
}
BENCHMARK(BM_ScoreMarginals)->Apply(marginal_measures)->Unit(benchmark::kMillisecond);

void BM_McBald(benchmark::State& state) {
  const auto t = pool(2000, 100, 10);
  for (auto _ : state) benchmark::DoNotOptimize(score_pool(t, Measure::kMcBald, {}, 0, 1));
}
BENCHMARK(BM_McBald)->Unit(benchmark::kMillisecond);

void BM_FitPool(benchmark::State& state) {
  const auto t = pool(2000, static_cast<std::size_t>(state.range(0)), 10);
  for (auto _ : state) benchmark::DoNotOptimize(fit_pool(t, {}, 1));
}
BENCHMARK(BM_FitPool)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
