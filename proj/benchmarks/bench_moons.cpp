#include <benchmark/benchmark.h>

#include "beaq/mlp.hpp"
#include "beaq/moons.hpp"

using namespace beaq;
using namespace beaq::sim;

namespace {

MlpModel trained() {
  const auto data = make_moons3(100, 0.1, 5);
  auto model = MlpModel::initialize(7);
  TrainConfig cfg;
  cfg.epochs = 20;
  train(model, data.points, data.labels, cfg);
  return model;
}

// MC dropout forward pass, M = 100 draws per point.
void BM_McForward(benchmark::State& state) {
  const auto model = trained();
  const auto pts = make_moons3(static_cast<std::size_t>(state.range(0)) / 3, 0.2, 9).points;
  for (auto _ : state) benchmark::DoNotOptimize(mc_forward(model, pts, 100, 1, {}, 1));
  state.SetItemsProcessed(state.iterations() * pts.rows());
}
BENCHMARK(BM_McForward)->Arg(300)->Arg(3000)->Unit(benchmark::kMillisecond);

void BM_TrainEpoch(benchmark::State& state) {
  const auto data = make_moons3(200, 0.1, 5);
  TrainConfig cfg;
  cfg.epochs = 1;
  auto model = MlpModel::initialize(7);
  for (auto _ : state) train(model, data.points, data.labels, cfg);
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

}  // namespace
