#include "beaq/moons.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "beaq/active_loop.hpp"
#include "beaq/error.hpp"
#include "beaq/io.hpp"
#include "beaq/parallel.hpp"
#include "beaq/random.hpp"

namespace beaq::sim {
namespace {

constexpr double kArcSpacing = 1.25;
constexpr double kArcLift = 0.5;

double arc_cx(int k) { return kArcSpacing * k; }
double arc_cy(int k) { return k % 2 == 0 ? 0.0 : kArcLift; }
double arc_orientation(int k) { return k % 2 == 0 ? 1.0 : -1.0; }

}  // namespace

MoonsDataset MoonsDataset::subset(std::span<const std::size_t> indices) const {
  MoonsDataset out;
  out.noise_sd = noise_sd;
  out.seed = seed;
  out.points.resize(static_cast<Eigen::Index>(indices.size()), 2);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.points.row(static_cast<Eigen::Index>(i)) = points.row(static_cast<Eigen::Index>(indices[i]));
    out.labels.push_back(labels[indices[i]]);
  }
  return out;
}

MoonsDataset make_moons3(std::size_t n_per_class, double noise_sd, std::uint64_t seed) {
  if (n_per_class == 0) throw DomainError("make_moons3: n_per_class must be >= 1");
  if (!(noise_sd >= 0.0)) throw DomainError("make_moons3: noise_sd must be >= 0");
  MoonsDataset data;
  data.noise_sd = noise_sd;
  data.seed = seed;
  data.points.resize(static_cast<Eigen::Index>(3 * n_per_class), 2);
  for (int k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      auto stream = CounterStream::keyed(seed, {tag(StreamTag::kMoons), static_cast<std::uint64_t>(k), i});
      const double t = std::numbers::pi * stream.uniform();
      const auto row = static_cast<Eigen::Index>(k * n_per_class + i);
      data.points(row, 0) = arc_cx(k) + std::cos(t);
      data.points(row, 1) = arc_cy(k) + arc_orientation(k) * std::sin(t);
      if (noise_sd > 0.0) {
        data.points(row, 0) += noise_sd * stream.normal();
        data.points(row, 1) += noise_sd * stream.normal();
      }
      data.labels.push_back(k);
    }
  }
  return data;
}

double distance_to_arc(int k, double x, double y) {
  const double dx = x - arc_cx(k);
  const double dy = (y - arc_cy(k)) * arc_orientation(k);
  if (dy >= 0.0) return std::abs(std::hypot(dx, dy) - 1.0);
  // Below the diameter: nearest point is an arc endpoint.
  return std::min(std::hypot(dx - 1.0, dy), std::hypot(dx + 1.0, dy));
}

double accuracy(const MlpModel& model, const MoonsDataset& data) {
  if (data.size() == 0) throw DomainError("accuracy: empty dataset");
  const Matrix probs = predict_proba(model, data.points);
  std::size_t hits = 0;
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    Eigen::Index best = 0;
    probs.row(r).maxCoeff(&best);
    if (static_cast<int>(best) == data.labels[static_cast<std::size_t>(r)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

Matrix grid_points(const GridSpec& grid) {
  if (grid.nx < 2 || grid.ny < 2) throw DomainError("grid: need at least 2 cells per axis");
  if (!(grid.x_max > grid.x_min) || !(grid.y_max > grid.y_min)) throw DomainError("grid: empty bounds");
  Matrix pts(static_cast<Eigen::Index>(grid.nx * grid.ny), 2);
  const double hx = (grid.x_max - grid.x_min) / static_cast<double>(grid.nx - 1);
  const double hy = (grid.y_max - grid.y_min) / static_cast<double>(grid.ny - 1);
  for (std::size_t j = 0; j < grid.ny; ++j) {
    for (std::size_t i = 0; i < grid.nx; ++i) {
      const auto row = static_cast<Eigen::Index>(j * grid.nx + i);
      pts(row, 0) = grid.x_min + hx * static_cast<double>(i);
      pts(row, 1) = grid.y_min + hy * static_cast<double>(j);
    }
  }
  return pts;
}

GridScores score_points(const MlpModel& model, const Matrix& points, Measure measure,
                        const ScoreOptions& options, std::size_t m_draws, std::uint64_t seed,
                        std::size_t workers) {
  const auto n = static_cast<std::size_t>(points.rows());
  GridScores out;
  out.x.resize(n);
  out.y.resize(n);
  out.score.resize(n);
  out.balent.resize(n);
  const std::size_t stride = m_draws * MlpModel::kClasses;
  parallel_for(
      n,
      [&](std::size_t i) {
        const auto row = static_cast<Eigen::Index>(i);
        const double x = points(row, 0);
        const double y = points(row, 1);
        // Keyed by location: the same coordinates always get the same draws.
        const std::uint64_t id = stream_id({std::bit_cast<std::uint64_t>(x), std::bit_cast<std::uint64_t>(y)});
        std::vector<double> draws(stride);
        mc_forward_point(model, x, y, m_draws, seed, id, draws);
        const PointScorer scorer({draws, m_draws, MlpModel::kClasses}, options.clamp);
        out.x[i] = x;
        out.y[i] = y;
        out.score[i] = scorer.score(measure, options, seed, id);
        out.balent[i] = balent(scorer.marginals(), options.balent, options.mjent_form);
      },
      workers);
  return out;
}

GridScores grid_scores(const MlpModel& model, const GridSpec& grid, Measure measure,
                       const ScoreOptions& options, std::size_t m_draws, std::uint64_t seed,
                       std::size_t workers) {
  return score_points(model, grid_points(grid), measure, options, m_draws, seed, workers);
}

std::string grid_csv(const GridScores& scores) {
  std::string out = "x,y,score,balent_sign\n";
  for (std::size_t i = 0; i < scores.score.size(); ++i) {
    out += io::format_double(scores.x[i]) + ',' + io::format_double(scores.y[i]) + ',' +
           io::format_double(scores.score[i]) + ',' + (scores.balent[i] >= 0.0 ? "1" : "-1") + '\n';
  }
  return out;
}

void validate(const ExperimentConfig& config) {
  if (config.pool_per_class == 0 || config.test_per_class == 0) {
    throw ConfigError("pool_per_class and test_per_class must be positive");
  }
  if (config.initial_labeled == 0) throw ConfigError("initial_labeled must be positive");
  if (config.k_per_iter == 0) throw ConfigError("k_per_iter must be positive");
  if (config.m_draws < 2) throw ConfigError("m_draws must be >= 2");
  if (config.repeats == 0) throw ConfigError("repeats must be positive");
  if (config.initial_labeled + config.iterations * config.k_per_iter > 3 * config.pool_per_class) {
    throw ConfigError("labeling budget exceeds the pool size");
  }
  validate(config.train);
}

std::vector<CurveRow> run_experiment(const ExperimentConfig& config, std::span<const Measure> measures) {
  validate(config);
  std::vector<CurveRow> rows;
  for (std::size_t repeat = 0; repeat < config.repeats; ++repeat) {
    const auto pool = make_moons3(config.pool_per_class, config.pool_noise_sd,
                                  stream_id({config.seed, repeat, tag(StreamTag::kMoons), 0}));
    const auto test = make_moons3(config.test_per_class, 0.0,
                                  stream_id({config.seed, repeat, tag(StreamTag::kMoons), 1}));
    const std::size_t n_pool = pool.size();

    std::vector<std::size_t> perm(n_pool);
    std::iota(perm.begin(), perm.end(), 0);
    auto shuffle = CounterStream::keyed(config.seed, {repeat, tag(StreamTag::kShuffle)});
    for (std::size_t i = n_pool - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(shuffle.uniform() * static_cast<double>(i + 1));
      std::swap(perm[i], perm[std::min(j, i)]);
    }
    const std::vector<std::size_t> initial(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(config.initial_labeled));

    for (Measure measure : measures) {
      PoolState state(n_pool, initial);
      LoopConfig loop;
      loop.k_per_iter = config.k_per_iter;
      loop.k_total = config.initial_labeled + config.iterations * config.k_per_iter;
      loop.measure = measure;
      loop.options = config.options;
      loop.seed = stream_id({config.seed, repeat, tag(StreamTag::kLoop)});
      loop.workers = config.workers;

      for (std::size_t it = 0; it <= config.iterations; ++it) {
        // Same init and training stream for every measure: only the labeled
        // set differs between the curves.
        const std::uint64_t round = stream_id({config.seed, repeat, it});
        auto model = MlpModel::initialize(stream_id({round, tag(StreamTag::kInit)}));
        const auto labeled = pool.subset(state.labeled());
        TrainConfig train_cfg = config.train;
        train_cfg.seed = stream_id({round, tag(StreamTag::kShuffle)});
        train(model, labeled.points, labeled.labels, train_cfg);
        rows.push_back({measure, repeat, it, state.labeled().size(), accuracy(model, test)});
        if (it == config.iterations) break;

        const auto& unlabeled = state.unlabeled();
        Matrix pts(static_cast<Eigen::Index>(unlabeled.size()), 2);
        std::vector<std::uint64_t> ids(unlabeled.begin(), unlabeled.end());
        for (std::size_t i = 0; i < unlabeled.size(); ++i) {
          pts.row(static_cast<Eigen::Index>(i)) = pool.points.row(static_cast<Eigen::Index>(unlabeled[i]));
        }
        const auto samples = mc_forward(model, pts, config.m_draws,
                                        stream_id({round, tag(StreamTag::kDropout)}), ids, config.workers);
        loop_step(state, samples, loop);
      }
    }
  }
  return rows;
}

std::string curve_csv(std::span<const CurveRow> rows) {
  struct Acc {
    std::size_t n_labeled = 0;
    double sum = 0.0;
    std::size_t count = 0;
  };
  // Keep measures in first-seen order.
  std::vector<Measure> order;
  std::map<std::pair<int, std::size_t>, Acc> acc;
  for (const auto& r : rows) {
    if (std::find(order.begin(), order.end(), r.measure) == order.end()) order.push_back(r.measure);
    auto& a = acc[{static_cast<int>(r.measure), r.iteration}];
    a.n_labeled = r.n_labeled;
    a.sum += r.accuracy;
    ++a.count;
  }
  std::string out = "measure,iteration,n_labeled,accuracy\n";
  for (Measure m : order) {
    for (const auto& [key, a] : acc) {
      if (key.first != static_cast<int>(m)) continue;
      out += std::string(measure_name(m)) + ',' + std::to_string(key.second) + ',' +
             std::to_string(a.n_labeled) + ',' + io::format_double(a.sum / static_cast<double>(a.count)) + '\n';
    }
  }
  return out;
}

double final_accuracy(std::span<const CurveRow> rows, Measure measure) {
  std::size_t last = 0;
  for (const auto& r : rows) {
    if (r.measure == measure) last = std::max(last, r.iteration);
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& r : rows) {
    if (r.measure == measure && r.iteration == last) {
      sum += r.accuracy;
      ++count;
    }
  }
  if (count == 0) throw DomainError("final_accuracy: measure not in curve");
  return sum / static_cast<double>(count);
}

}  // namespace beaq::sim
