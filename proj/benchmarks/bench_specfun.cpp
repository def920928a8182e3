#include <benchmark/benchmark.h>

#include <vector>

#include "beaq/random.hpp"
#include "beaq/specfun.hpp"

using namespace beaq;

namespace {

std::vector<double> arguments() {
  auto s = CounterStream::keyed(1, {});
  std::vector<double> x(4096);
  for (double& v : x) v = 0.05 + 100.0 * s.uniform();
  return x;
}

void BM_Digamma(benchmark::State& state) {
  const auto x = arguments();
  for (auto _ : state) {
    for (double v : x) benchmark::DoNotOptimize(specfun::digamma(v));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.size()));
}
BENCHMARK(BM_Digamma);

void BM_LogBeta(benchmark::State& state) {
  const auto x = arguments();
  for (auto _ : state) {
    for (std::size_t i = 1; i < x.size(); ++i) benchmark::DoNotOptimize(specfun::log_beta(x[i - 1], x[i]));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.size() - 1));
}
BENCHMARK(BM_LogBeta);

void BM_BetaEntropy(benchmark::State& state) {
  const auto x = arguments();
  for (auto _ : state) {
    for (std::size_t i = 1; i < x.size(); ++i) benchmark::DoNotOptimize(specfun::beta_entropy(x[i - 1], x[i]));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.size() - 1));
}
BENCHMARK(BM_BetaEntropy);

void BM_Philox(benchmark::State& state) {
  auto s = CounterStream::keyed(2, {});
  for (auto _ : state) benchmark::DoNotOptimize(s.next_u64());
}
BENCHMARK(BM_Philox);

}  // namespace
