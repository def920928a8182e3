#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "beaq/acquisition.hpp"
#include "beaq/mlp.hpp"

namespace beaq::sim {

/// Three interlocking unit half-circles. Arc k is centered at (1.25 k,
/// 0.5 (k mod 2)); even arcs open downward (upper half), odd arcs upward.
struct MoonsDataset {
  Matrix points;            // (n x 2)
  std::vector<int> labels;  // arc index, 0..2
  double noise_sd = 0.0;
  std::uint64_t seed = 0;

  std::size_t size() const { return labels.size(); }
  MoonsDataset subset(std::span<const std::size_t> indices) const;
};

/// Angles are uniform on [0, pi] from the stream keyed by (seed, class,
/// point); noise is isotropic Gaussian with sd `noise_sd`.
MoonsDataset make_moons3(std::size_t n_per_class, double noise_sd, std::uint64_t seed);

/// Distance from (x, y) to the noiseless arc of class k.
double distance_to_arc(int k, double x, double y);

double accuracy(const MlpModel& model, const MoonsDataset& data);

// ---- grid maps -------------------------------------------------------------

struct GridSpec {
  double x_min = -1.5;
  double x_max = 4.0;
  double y_min = -1.0;
  double y_max = 1.5;
  std::size_t nx = 300;
  std::size_t ny = 300;
};

struct GridScores {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> score;
  std::vector<double> balent;  // BalEnt of each cell, for the sign map
};

/// Lattice of nx * ny cells, x varying fastest.
Matrix grid_points(const GridSpec& grid);

/// MC-dropout draws per point (keyed by its coordinates), then `measure` and
/// BalEnt from the fitted marginals. Points are streamed one at a time.
GridScores score_points(const MlpModel& model, const Matrix& points, Measure measure,
                        const ScoreOptions& options, std::size_t m_draws, std::uint64_t seed,
                        std::size_t workers = 0);

GridScores grid_scores(const MlpModel& model, const GridSpec& grid, Measure measure,
                       const ScoreOptions& options, std::size_t m_draws, std::uint64_t seed,
                       std::size_t workers = 0);

/// "x,y,score,balent_sign" with sign 1 where BalEnt >= 0, else -1.
std::string grid_csv(const GridScores& scores);

// ---- end-to-end loop -------------------------------------------------------

struct ExperimentConfig {
  std::size_t pool_per_class = 200;
  double pool_noise_sd = 0.1;
  std::size_t test_per_class = 300;  // held out, noiseless
  std::size_t initial_labeled = 10;
  std::size_t k_per_iter = 5;
  std::size_t iterations = 20;
  std::size_t m_draws = 100;
  std::size_t repeats = 3;
  TrainConfig train;
  ScoreOptions options;
  std::uint64_t seed = 0;
  std::size_t workers = 0;
};

void validate(const ExperimentConfig& config);

struct CurveRow {
  Measure measure = Measure::kRandom;
  std::size_t repeat = 0;
  std::size_t iteration = 0;
  std::size_t n_labeled = 0;
  double accuracy = 0.0;
};

/// For each repeat and measure: start from the same random initial set,
/// then per iteration retrain from scratch, record test accuracy, score the
/// unlabeled pool and label the top K. Iteration `iterations` records the
/// final accuracy without selecting further.
std::vector<CurveRow> run_experiment(const ExperimentConfig& config, std::span<const Measure> measures);

/// Accuracy averaged over repeats: "measure,iteration,n_labeled,accuracy".
std::string curve_csv(std::span<const CurveRow> rows);

/// Mean accuracy of `measure` at the last iteration.
double final_accuracy(std::span<const CurveRow> rows, Measure measure);

}  // namespace beaq::sim
