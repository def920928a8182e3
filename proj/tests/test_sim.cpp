#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <vector>

#include "beaq/error.hpp"
#include "beaq/mlp.hpp"
#include "beaq/moons.hpp"
#include "beaq/oracle.hpp"
#include "test_util.hpp"

using namespace beaq;
using namespace beaq::sim;

TEST_SUITE_BEGIN("sim");

namespace {

MlpModel fixture_model() { return load_model(std::string(BEAQ_FIXTURES) + "/moons_model.bin"); }

// Multinomial logistic regression by full-batch gradient descent.
double linear_training_accuracy(const MoonsDataset& d) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 3);  // rows: x, y, bias
  const auto n = static_cast<Eigen::Index>(d.size());
  Eigen::MatrixXd x(n, 3);
  x << d.points.cast<double>(), Eigen::VectorXd::Ones(n);
  for (int it = 0; it < 3000; ++it) {
    Eigen::MatrixXd logits = x * w;
    for (Eigen::Index r = 0; r < n; ++r) {
      logits.row(r).array() -= logits.row(r).maxCoeff();
      logits.row(r) = logits.row(r).array().exp();
      logits.row(r) /= logits.row(r).sum();
      logits(r, d.labels[r]) -= 1.0;
    }
    w -= 0.5 * x.transpose() * logits / static_cast<double>(n);
  }
  const Eigen::MatrixXd logits = x * w;
  std::size_t right = 0;
  for (Eigen::Index r = 0; r < n; ++r) {
    Eigen::Index arg = 0;
    logits.row(r).maxCoeff(&arg);
    right += arg == d.labels[r];
  }
  return static_cast<double>(right) / static_cast<double>(n);
}

double total_variance(const SampleTensor& t, std::size_t point) {
  double total = 0.0;
  for (std::size_t c = 0; c < t.n_classes(); ++c) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t d = 0; d < t.n_draws(); ++d) {
      mean += t.at(point, d, c);
      sq += t.at(point, d, c) * t.at(point, d, c);
    }
    mean /= t.n_draws();
    total += sq / t.n_draws() - mean * mean;
  }
  return total;
}

}  // namespace

TEST_CASE("noiseless moons lie on their arcs") {
  const auto d = make_moons3(200, 0.0, 1);
  CHECK(d.size() == 600);
  for (std::size_t i = 0; i < d.size(); ++i) {
    REQUIRE(distance_to_arc(d.labels[i], d.points(i, 0), d.points(i, 1)) < 1e-12);
  }
}

TEST_CASE("moons are deterministic and balanced") {
  const auto a = make_moons3(101, 0.1, 2);
  const auto b = make_moons3(101, 0.1, 2);
  CHECK(a.points == b.points);
  CHECK(a.labels == b.labels);
  CHECK_FALSE(a.points == make_moons3(101, 0.1, 3).points);
  for (int k = 0; k < 3; ++k) CHECK(std::count(a.labels.begin(), a.labels.end(), k) == 101);
  CHECK(a.points.allFinite());

  const std::size_t idx[] = {5, 300};
  const auto s = a.subset(idx);
  CHECK(s.size() == 2);
  CHECK(s.labels[1] == a.labels[300]);
  CHECK(s.points(1, 0) == a.points(300, 0));
}

TEST_CASE("an MLP separates the moons better than a linear classifier") {
  const auto d = make_moons3(1000, 0.1, 4);
  auto model = MlpModel::initialize(5);
  TrainConfig cfg;
  cfg.seed = 6;
  train(model, d.points, d.labels, cfg);
  const double mlp = accuracy(model, d);
  const double linear = linear_training_accuracy(d);
  MESSAGE("linear " << linear << ", mlp " << mlp);
  CHECK(linear < mlp);
}

TEST_CASE("training halves the loss and generalizes") {
  const auto d = make_moons3(100, 0.1, 7);
  auto model = MlpModel::initialize(8);
  TrainConfig cfg;
  cfg.seed = 9;
  const auto report = train(model, d.points, d.labels, cfg);
  CHECK(report.final_loss <= 0.5 * report.initial_loss);
  CHECK(report.steps == 150 * 3);
  CHECK(model.finite());
  CHECK(accuracy(model, make_moons3(300, 0.0, 10)) > 0.85);
}

TEST_CASE("zero epochs leave the model unchanged; bad configs are rejected") {
  const auto d = make_moons3(10, 0.1, 11);
  auto model = MlpModel::initialize(12);
  const auto before = model;
  TrainConfig cfg;
  cfg.epochs = 0;
  train(model, d.points, d.labels, cfg);
  CHECK(model == before);

  cfg.epochs = 1;
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg.learning_rate = 0.01;
  cfg.batch_size = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
}

TEST_CASE("training reports divergence") {
  const auto d = make_moons3(20, 0.1, 13);
  auto model = MlpModel::initialize(14);
  TrainConfig cfg;
  cfg.learning_rate = std::numeric_limits<double>::infinity();
  cfg.epochs = 3;
  CHECK_THROWS_AS(train(model, d.points, d.labels, cfg), Error);
}

TEST_CASE("backprop gradient matches central differences with frozen masks") {
  const auto d = make_moons3(4, 0.1, 15);
  const auto model = MlpModel::initialize(16);
  const auto masks = sample_masks(d.size(), model.dropout(), 17, {1});
  std::vector<Matrix> grad;
  loss_and_gradient(model, d.points, d.labels, masks, &grad);

  auto s = CounterStream::keyed(18, {});
  int checked = 0;
  while (checked < 10) {
    const int k = static_cast<int>(s.next_u32() % MlpModel::kParamCount);
    const auto& p = model.params()[k];
    const auto r = static_cast<Eigen::Index>(s.next_u32() % p.rows());
    const auto c = static_cast<Eigen::Index>(s.next_u32() % p.cols());
    const double analytic = grad[k](r, c);
    if (std::abs(analytic) < 1e-6) continue;  // dead unit: nothing to compare
    const double h = 1e-5;
    auto plus = model, minus = model;
    plus.params()[k](r, c) += h;
    minus.params()[k](r, c) -= h;
    const double numeric = (loss_and_gradient(plus, d.points, d.labels, masks, nullptr) -
                            loss_and_gradient(minus, d.points, d.labels, masks, nullptr)) /
                           (2.0 * h);
    CAPTURE(k);
    CHECK(std::abs(analytic - numeric) / std::max(std::abs(analytic), std::abs(numeric)) < 1e-4);
    ++checked;
  }
}

TEST_CASE("dropout masks") {
  const auto m = sample_masks(500, 0.2, 1, {2});
  const double keep = 1.0 / 0.8;
  std::size_t zeros = 0;
  for (Eigen::Index i = 0; i < m.layer2.size(); ++i) {
    const double v = m.layer2.data()[i];
    REQUIRE((v == 0.0 || v == keep));
    zeros += v == 0.0;
  }
  const double rate = static_cast<double>(zeros) / static_cast<double>(m.layer2.size());
  CHECK(std::abs(rate - 0.2) < 0.01);
  CHECK((identity_masks(3).layer3.array() == 1.0).all());
}

TEST_CASE("MC forward: simplex rows, determinism, dropout off") {
  const auto model = fixture_model();
  const auto pts = make_moons3(5, 0.2, 19).points;
  const auto t = mc_forward(model, pts, 100, 20);
  for (std::size_t n = 0; n < t.n_points(); ++n) {
    for (std::size_t dr = 0; dr < t.n_draws(); ++dr) {
      double sum = 0.0;
      for (std::size_t c = 0; c < 3; ++c) sum += t.at(n, dr, c);
      REQUIRE(std::abs(sum - 1.0) < 1e-9);
    }
  }
  CHECK(mc_forward(model, pts, 100, 20, {}, 3) == t);
  CHECK_FALSE(mc_forward(model, pts, 100, 21) == t);

  auto nodrop = model;
  nodrop.set_dropout(0.0);
  const auto flat = mc_forward(nodrop, pts, 10, 20);
  for (std::size_t n = 0; n < flat.n_points(); ++n) {
    for (std::size_t dr = 1; dr < flat.n_draws(); ++dr) {
      for (std::size_t c = 0; c < 3; ++c) REQUIRE(flat.at(n, dr, c) == flat.at(n, 0, c));
    }
  }
  const auto proba = predict_proba(nodrop, pts);
  CHECK(std::abs(proba(0, 0) - flat.at(0, 0, 0)) < 1e-12);
}

TEST_CASE("a decision-boundary point varies more than an interior point") {
  const auto model = fixture_model();
  GridSpec g;
  g.nx = 60;
  g.ny = 60;
  const auto grid = grid_points(g);
  const auto proba = predict_proba(model, grid);
  Eigen::Index boundary = 0;
  proba.rowwise().maxCoeff().minCoeff(&boundary);

  Matrix pts(2, 2);
  pts << grid(boundary, 0), grid(boundary, 1), -0.9, 0.3;  // second: on arc 0, far from the others
  const auto t = mc_forward(model, pts, 100, 22);
  MESSAGE("boundary " << total_variance(t, 0) << ", interior " << total_variance(t, 1));
  CHECK(total_variance(t, 0) > total_variance(t, 1));
}

TEST_CASE("model snapshots round-trip and reject corruption") {
  const auto model = MlpModel::initialize(23, 0.3);
  const auto bytes = encode_model(model);
  CHECK(decode_model(bytes) == model);
  CHECK(decode_model(bytes).dropout() == 0.3);
  CHECK_THROWS_AS(decode_model(bytes.substr(0, bytes.size() - 4)), FormatError);
  CHECK_THROWS_AS(decode_model("BEAQX1" + bytes.substr(6)), FormatError);
  CHECK_THROWS_AS(decode_model(bytes + "!"), FormatError);
  try {
    decode_model(bytes.substr(0, 10));
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.offset() <= 10);
  }
}

TEST_CASE("grid scoring: 100x100 in seconds; duplicated rows give duplicated scores") {
  const auto model = fixture_model();
  GridSpec g;
  g.nx = 100;
  g.ny = 100;
  const auto start = std::chrono::steady_clock::now();
  const auto scores = grid_scores(model, g, Measure::kBalentAcq, {}, 100, 24);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  MESSAGE("100x100 grid at M=100: " << secs << " s");
  CHECK(scores.score.size() == 10000);
  CHECK(secs < 20.0);

  const auto pts = grid_points(g);
  Matrix dup(4, 2);
  dup << pts.row(17), pts.row(17), pts.row(17), pts.row(4242);
  for (Measure m : {Measure::kBalentAcq, Measure::kRandom, Measure::kMcBald}) {
    const auto d = score_points(model, dup, m, {}, 100, 24);
    CHECK(d.score[0] == d.score[1]);
    CHECK(d.score[0] == d.score[2]);
    CHECK(d.score[0] != d.score[3]);
    CHECK(d.balent[0] == d.balent[2]);
  }
  // Same cell, same score, whatever grid it sits in.
  CHECK(score_points(model, dup, Measure::kBalentAcq, {}, 100, 24).score[3] == scores.score[4242]);

  const std::string csv = grid_csv(scores);
  CHECK(csv.rfind("x,y,score,balent_sign\n", 0) == 0);
}

TEST_CASE("identical draws give identical scores") {
  const auto model = fixture_model();
  Matrix one(1, 2);
  one << 0.6, 0.1;
  std::vector<double> draws(100 * 3);
  mc_forward_point(model, 0.6, 0.1, 100, 25, 7, draws);
  std::vector<double> values;
  for (int r = 0; r < 3; ++r) values.insert(values.end(), draws.begin(), draws.end());
  const SampleTensor t(3, 100, 3, values);
  for (Measure m : {Measure::kBalentAcq, Measure::kEntropy, Measure::kMcBald}) {
    const auto s = score_pool(t, m).score;
    CHECK(s[0] == s[1]);
    CHECK(s[1] == s[2]);
  }
}

TEST_CASE("fixture grid: balentacq favours the non-negative BalEnt region") {
  const auto model = fixture_model();
  GridSpec g;
  g.nx = 100;
  g.ny = 100;
  const auto acq = grid_scores(model, g, Measure::kBalentAcq, {}, 100, 26);
  const std::size_t n = acq.score.size();
  const std::size_t k = 25;

  const auto nonneg = std::count_if(acq.balent.begin(), acq.balent.end(), [](double v) { return v >= 0.0; });
  MESSAGE(nonneg << " cells with BalEnt >= 0");
  REQUIRE(nonneg >= static_cast<long>(k));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return acq.score[a] > acq.score[b]; });
  for (std::size_t i = 0; i < k; ++i) CHECK(acq.balent[order[i]] >= 0.0);
}

TEST_CASE("fixture grid: balentacq top-25 avoids the top 1% of aleatoric cells" * doctest::test_suite("sim_grid")) {
  const auto model = fixture_model();
  GridSpec g;
  g.nx = 100;
  g.ny = 100;
  const auto acq = grid_scores(model, g, Measure::kBalentAcq, {}, 100, 26);
  const auto alea = grid_scores(model, g, Measure::kAleatoric, {}, 100, 26);
  const std::size_t n = acq.score.size();
  const std::size_t k = 25;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return acq.score[a] > acq.score[b]; });
  std::vector<double> sorted = alea.score;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double top_percent = sorted[n / 100 - 1];
  for (std::size_t i = 0; i < k; ++i) {
    CAPTURE(i);
    CHECK(alea.score[order[i]] < top_percent);
  }
}

TEST_CASE("random acquisition: accuracy rises with the labeled count; reruns are identical") {
  ExperimentConfig cfg;
  cfg.repeats = 3;
  cfg.iterations = 20;
  cfg.k_per_iter = 5;
  cfg.m_draws = 100;
  cfg.seed = 27;
  const Measure ms[] = {Measure::kRandom};
  const auto rows = run_experiment(cfg, ms);
  CHECK(rows.size() == 3 * 21);

  std::vector<double> acc(21, 0.0), labeled(21, 0.0);
  for (const auto& r : rows) {
    acc[r.iteration] += r.accuracy / 3.0;
    labeled[r.iteration] = static_cast<double>(r.n_labeled);
  }
  CHECK(labeled.front() == 10);
  CHECK(labeled.back() == 110);
  const double rho = oracle::spearman(labeled, acc);
  MESSAGE("spearman(accuracy, labeled) = " << rho);
  CHECK(rho > 0.8);

  ExperimentConfig small = cfg;
  small.repeats = 1;
  small.iterations = 3;
  const Measure both[] = {Measure::kRandom, Measure::kBalentAcq};
  const auto a = run_experiment(small, both);
  const auto b = run_experiment(small, both);
  CHECK(curve_csv(a) == curve_csv(b));
  CHECK(curve_csv(a).rfind("measure,iteration,n_labeled,accuracy\n", 0) == 0);
  CHECK(final_accuracy(a, Measure::kRandom) == final_accuracy(b, Measure::kRandom));
  CHECK_THROWS_AS(final_accuracy(a, Measure::kEntropy), DomainError);
}

TEST_SUITE_END();
