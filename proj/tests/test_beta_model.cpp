#include <doctest.h>

#include <cmath>
#include <vector>

#include "beaq/beta_model.hpp"
#include "beaq/error.hpp"
#include "beaq/random.hpp"
#include "test_util.hpp"

using namespace beaq;

TEST_SUITE_BEGIN("beta_model");

namespace {

MomentEstimate moments_of(const std::vector<double>& first_class, const ClampConfig& cfg = {}) {
  const auto t = testutil::binary_tensor({first_class});
  std::vector<MomentEstimate> out(2);
  estimate_point_moments(t.point(0), cfg, out);
  return out[0];
}

}  // namespace

TEST_CASE("two-point moments") {
  const auto m = moments_of({0.4, 0.6});
  CHECK(m.moments.mean == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::abs(m.moments.variance - 0.01) < 1e-15);
  CHECK(m.flags == kClampNone);
}

TEST_CASE("constant draws hit the variance floor") {
  const ClampConfig cfg;
  const auto m = moments_of({0.7, 0.7, 0.7}, cfg);
  CHECK(m.moments.variance == cfg.variance_eps);
  CHECK((m.flags & kVarianceFloor) != 0);
}

TEST_CASE("0/1 draws hit the variance ceiling") {
  const ClampConfig cfg;
  const auto m = moments_of({0.0, 1.0}, cfg);
  CHECK(m.moments.mean == 0.5);
  CHECK(std::abs(m.moments.variance - 0.25 * (1.0 - cfg.ratio_eps)) < 1e-15);
  CHECK((m.flags & kVarianceCeiling) != 0);
}

TEST_CASE("moment estimation errors") {
  const auto single = testutil::binary_tensor({{0.3}});
  std::vector<MomentEstimate> out(2);
  CHECK_THROWS_AS(estimate_point_moments(single.point(0), {}, out), InsufficientDrawsError);

  const std::vector<double> raw{0.5, std::nan(""), 0.5, 0.5};
  const DrawMatrix bad{raw, 2, 2};
  CHECK_THROWS_AS(estimate_point_moments(bad, {}, out), DataError);
}

TEST_CASE("fit_beta examples") {
  const auto a = fit_beta({0.5, 0.05});
  CHECK(std::abs(a.alpha - 2.0) < 1e-12);
  CHECK(std::abs(a.beta - 2.0) < 1e-12);

  const auto b = fit_beta({0.9, 0.009});
  CHECK(std::abs(b.alpha - 8.1) < 1e-12);
  CHECK(std::abs(b.beta - 0.9) < 1e-12);

  const ClampConfig cfg;
  std::uint8_t flags = 0;
  const auto c = fit_beta({0.5, 0.25 * (1.0 - 1e-12)}, cfg, &flags);
  CHECK(c.alpha == cfg.param_min);
  CHECK(c.beta == cfg.param_min);
  CHECK((flags & kParameterCap) != 0);
}

TEST_CASE("fitted Beta reproduces its moments") {
  auto s = CounterStream::keyed(21, {});
  for (int i = 0; i < 200; ++i) {
    const double a = testutil::log_uniform(s, 0.05, 100.0);
    const double b = testutil::log_uniform(s, 0.05, 100.0);
    const double m = a / (a + b);
    const double v = a * b / ((a + b) * (a + b) * (a + b + 1.0));
    const auto p = fit_beta({m, v});
    CHECK(std::abs(p.alpha - a) < 1e-9 * a);
    CHECK(std::abs(p.beta - b) < 1e-9 * b);
  }
}

TEST_CASE("Beta(3,5) draws fit back to (3,5) and (5,3)") {
  const std::size_t m = 100000;
  auto s = CounterStream::keyed(22, {});
  std::vector<double> p(m);
  for (auto& v : p) {
    const double g3 = std::exp(s.log_gamma_variate(3.0));
    const double g5 = std::exp(s.log_gamma_variate(5.0));
    v = g3 / (g3 + g5);
  }
  const auto fitted = fit_pool(testutil::binary_tensor({p}));
  CHECK(std::abs(fitted.alpha(0, 0) / 3.0 - 1.0) < 0.05);
  CHECK(std::abs(fitted.beta(0, 0) / 5.0 - 1.0) < 0.05);
  CHECK(std::abs(fitted.alpha(0, 1) / 5.0 - 1.0) < 0.05);
  CHECK(std::abs(fitted.beta(0, 1) / 3.0 - 1.0) < 0.05);
}

TEST_CASE("one-hot samples clamp every class") {
  const SampleTensor t(1, 3, 3, {1, 0, 0, 1, 0, 0, 1, 0, 0});
  const auto fitted = fit_pool(t);
  for (std::size_t c = 0; c < 3; ++c) {
    CAPTURE(c);
    CHECK((fitted.flags(0, c) & kVarianceFloor) != 0);
    CHECK(std::isfinite(fitted.alpha(0, c)));
    CHECK(fitted.alpha(0, c) > 0.0);
    CHECK(fitted.beta(0, c) > 0.0);
  }
  const auto rates = clamp_rates(fitted);
  CHECK(rates.variance_floor == 1.0);
}

TEST_CASE("duplicated rows give identical fitted rows for any worker count") {
  auto s = CounterStream::keyed(23, {});
  std::vector<double> row(50);
  for (auto& v : row) v = s.uniform_open();
  const auto t = testutil::binary_tensor({row, row, row});
  const auto one = fit_pool(t, {}, 1);
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(one.alpha(0, c) == one.alpha(1, c));
    CHECK(one.alpha(0, c) == one.alpha(2, c));
    CHECK(one.beta(0, c) == one.beta(2, c));
  }
  CHECK(fit_pool(t, {}, 3) == one);
}

TEST_CASE("sample tensor validation names the first bad row") {
  try {
    SampleTensor(2, 2, 2, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.9, 0.2});
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("(point 1, draw 1)") != std::string::npos);
  }
  CHECK_THROWS_AS(SampleTensor(1, 2, 2, {0.5, 0.5}), DomainError);
  CHECK_THROWS_AS(SampleTensor(1, 1, 1, {1.0}), DomainError);
  CHECK_THROWS_AS(SampleTensor(1, 1, 2, {1.5, -0.5}), DataError);
}

TEST_SUITE_END();
