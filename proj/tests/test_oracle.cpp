#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "beaq/acquisition.hpp"
#include "beaq/error.hpp"
#include "beaq/oracle.hpp"
#include "beaq/specfun.hpp"
#include "test_util.hpp"

using namespace beaq;
using namespace beaq::oracle;

TEST_SUITE_BEGIN("oracle");

TEST_CASE("dirichlet_bald examples") {
  const std::vector<double> flat{1.0, 1.0};
  CHECK(std::abs(dirichlet_bald(flat) - (std::numbers::ln2 - 0.5)) < 1e-12);
  const std::vector<double> sharp(5, 1e6);
  CHECK(dirichlet_bald(sharp) < 1e-5);
  CHECK(dirichlet_bald(sharp) >= 0.0);
}

TEST_CASE("quadrature_beta_entropy") {
  CHECK(std::abs(quadrature_beta_entropy(1.0, 1.0)) < 1e-12);
  CHECK(std::abs(quadrature_beta_entropy(2.0, 2.0) - (5.0 / 3.0 - std::log(6.0))) < 1e-8);
  CHECK(std::abs(quadrature_beta_entropy(2.0, 2.0) - specfun::beta_entropy(2.0, 2.0)) < 1e-8);
  CHECK(std::abs(quadrature_beta_entropy(0.2, 0.3) - specfun::beta_entropy(0.2, 0.3)) < 1e-7);
}

TEST_CASE("quadrature references on the uniform case") {
  const auto u = testutil::uniform2();
  CHECK(std::abs(quadrature_mjent(u.view()) - 0.5) < 1e-9);
  CHECK(std::abs(quadrature_aleatoric(u.view()) - 0.5) < 1e-9);
}

TEST_CASE("mc_dirichlet_bald brackets the exact value") {
  const std::vector<double> eta{0.5, 2.0, 3.0};
  const auto mc = mc_dirichlet_bald(eta, 20000, 41);
  CHECK(mc.std_error > 0.0);
  CHECK(std::abs(mc.mean - dirichlet_bald(eta)) < 4.0 * mc.std_error);
  const auto again = mc_dirichlet_bald(eta, 20000, 41);
  CHECK(again.mean == mc.mean);
}

TEST_CASE("generate_pool is deterministic and validated") {
  SyntheticPoolSpec spec;
  spec.n_points = 5;
  spec.n_draws = 30;
  spec.n_classes = 4;
  spec.seed = 3;
  const auto a = generate_pool(spec);
  CHECK(a == generate_pool(spec));
  CHECK_FALSE(a == generate_pool(spec, 1));

  // A single point regenerates alone.
  std::vector<double> row(spec.n_draws * spec.n_classes);
  generate_point(spec, 0, 2, row);
  const auto p2 = a.point(2).values;
  CHECK(std::vector<double>(p2.begin(), p2.end()) == row);

  SyntheticPoolSpec bad = spec;
  bad.n_classes = 1;
  CHECK_THROWS_AS(validate(bad), DomainError);
  bad = spec;
  bad.n_draws = 1;
  CHECK_THROWS_AS(validate(bad), DomainError);
  bad = spec;
  bad.log_concentration_min = 3.0;
  bad.log_concentration_max = 2.0;
  bad.kind = PoolKind::kDirichlet;
  CHECK_THROWS_AS(validate(bad), DomainError);
}

TEST_CASE("Dirichlet(1,1) pool has per-class mean one half") {
  SyntheticPoolSpec spec;
  spec.kind = PoolKind::kDirichlet;
  spec.n_points = 1;
  spec.n_draws = 10000;
  spec.n_classes = 2;
  spec.log_concentration_min = 0.0;
  spec.log_concentration_max = 0.0;
  spec.seed = 4;
  const auto pool = generate_pool(spec);
  for (std::size_t c = 0; c < 2; ++c) {
    double sum = 0.0;
    for (std::size_t d = 0; d < spec.n_draws; ++d) sum += pool.at(0, d, c);
    CHECK(std::abs(sum / spec.n_draws - 0.5) < 0.01);
  }
}

TEST_CASE("average ranks and spearman") {
  const std::vector<double> x{3.0, 1.0, 2.0, 2.0};
  CHECK(average_ranks(x) == std::vector<double>{4.0, 1.0, 2.5, 2.5});

  const std::vector<double> a{1, 2, 3, 4, 5}, rev{5, 4, 3, 2, 1};
  CHECK(spearman(a, a) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(spearman(a, rev) == doctest::Approx(-1.0).epsilon(1e-15));
  const std::vector<double> p{1, 2, 3}, q{1, 3, 2};
  CHECK(std::abs(spearman(p, q) - 0.5) < 1e-15);

  const std::vector<double> flat{2, 2, 2}, two{1, 2};
  CHECK_THROWS_AS(spearman(p, flat), DomainError);
  CHECK_THROWS_AS(spearman(two, two), DomainError);
  CHECK_THROWS_AS(spearman(a, p), DomainError);
}

TEST_CASE("rmse") {
  const std::vector<double> a{0.1, 0.2, 0.3}, b{0.1, 0.2, 0.5};
  CHECK(rmse(a, a) == 0.0);
  CHECK(std::abs(rmse(a, b) - std::sqrt(0.04 / 3.0)) < 1e-15);
}

TEST_CASE("rank correlation study") {
  SyntheticPoolSpec spec;
  spec.n_points = 40;
  spec.n_draws = 200;
  spec.n_classes = 10;
  spec.seed = 5;
  const Measure ms[] = {Measure::kEntropy, Measure::kBetaMarginalBald, Measure::kExpectedEffectiveLoss};
  const auto report = rank_correlation_study(spec, ms, 2);
  CHECK(report.pairs.size() == 3);
  CHECK(report.repeats == 2);
  const auto* bmb = report.find(Measure::kBetaMarginalBald, Measure::kExpectedEffectiveLoss);
  REQUIRE(bmb != nullptr);
  CHECK(bmb->rho.size() == 2);
  CHECK(bmb->rho_mean > 0.95);
  CHECK(report.find(Measure::kMcBald, Measure::kEntropy) == nullptr);

  const Measure same[] = {Measure::kEntropy, Measure::kEntropy};
  const auto self = rank_correlation_study(spec, same, 1);
  REQUIRE(self.pairs.size() == 1);
  CHECK(self.pairs[0].rho_mean == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(self.pairs[0].rho_sd == 0.0);

  const auto again = rank_correlation_study(spec, ms, 2, {}, 3);
  CHECK(again.pairs[1].rho == report.pairs[1].rho);
}

TEST_CASE("RMSE study on a softmax-Gaussian pool") {
  SyntheticPoolSpec spec;
  spec.n_points = 100;
  spec.n_draws = 1000;
  spec.n_classes = 10;
  spec.seed = 6;
  const auto r = rmse_study(spec, 1);
  CHECK(r.rmse_mean < 0.1);
  CHECK(r.rho_mean > 0.96);
}

TEST_SUITE_END();
