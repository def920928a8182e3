#include <doctest.h>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>

#include "beaq/error.hpp"
#include "beaq/oracle.hpp"
#include "beaq/random.hpp"
#include "beaq/specfun.hpp"
#include "test_util.hpp"

using namespace beaq;
using namespace beaq::specfun;

TEST_SUITE_BEGIN("specfun");

namespace {

long double ref_lgamma(double x) { return boost::math::lgamma(static_cast<long double>(x)); }
long double ref_digamma(double x) { return boost::math::digamma(static_cast<long double>(x)); }

}  // namespace

TEST_CASE("log_gamma point values") {
  CHECK(std::abs(log_gamma(1.0)) < 1e-14);
  CHECK(std::abs(log_gamma(5.0) - 3.1780538303479458) < 1e-13);
  CHECK(std::abs(log_gamma(0.5) - 0.5 * std::log(std::numbers::pi)) < 1e-14);
  CHECK(std::abs(log_gamma(0.5) - 0.5723649429247001) < 1e-13);
}

TEST_CASE("log_gamma against an extended-precision reference") {
  // lgamma has roots at 1 and 2, so the error is taken relative to
  // max(1, |value|).
  auto s = CounterStream::keyed(11, {});
  double worst = 0.0;
  for (int i = 0; i < 4000; ++i) {
    const double x = testutil::log_uniform(s, 1e-3, 1e6);
    const long double ref = ref_lgamma(x);
    const double err = static_cast<double>(std::abs(log_gamma(x) - ref) / std::max(1.0L, std::abs(ref)));
    worst = std::max(worst, err);
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("digamma point values") {
  CHECK(std::abs(digamma(1.0) + 0.5772156649015329) < 1e-13);
  CHECK(std::abs(digamma(0.5) + 1.9635100260214235) < 1e-13);
  CHECK(std::abs(digamma(4.0) - 1.2561176684318005) < 1e-13);
}

TEST_CASE("digamma absolute error against an extended-precision reference") {
  auto s = CounterStream::keyed(12, {});
  double worst = 0.0;
  for (int i = 0; i < 4000; ++i) {
    const double x = testutil::log_uniform(s, 1e-3, 1e6);
    worst = std::max(worst, static_cast<double>(std::abs(digamma(x) - ref_digamma(x))));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("digamma recurrence") {
  auto s = CounterStream::keyed(13, {});
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = 100.0 * s.uniform_open();
    worst = std::max(worst, std::abs(digamma(x + 1.0) - digamma(x) - 1.0 / x));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("log_beta") {
  CHECK(std::abs(log_beta(1.0, 1.0)) < 1e-14);
  CHECK(std::abs(log_beta(2.0, 3.0) + 2.4849066497880004) < 1e-13);

  auto s = CounterStream::keyed(14, {});
  double worst = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const double a = testutil::log_uniform(s, 1e-3, 1e3);
    const double b = testutil::log_uniform(s, 1e-3, 1e3);
    const long double ref = ref_lgamma(a) + ref_lgamma(b) - boost::math::lgamma(static_cast<long double>(a) + b);
    worst = std::max(worst, static_cast<double>(std::abs(log_beta(a, b) - ref)));
    REQUIRE(log_beta(a, b) == log_beta(b, a));
  }
  CHECK(worst <= 1e-11);
}

TEST_CASE("beta_entropy point values") {
  CHECK(std::abs(beta_entropy(1.0, 1.0)) < 1e-14);
  CHECK(std::abs(beta_entropy(2.0, 2.0) - (5.0 / 3.0 - std::log(6.0))) < 1e-14);
  CHECK(std::abs(beta_entropy(2.0, 1.0) - (0.5 - std::log(2.0))) < 1e-14);
}

TEST_CASE("beta_entropy agrees with quadrature and is symmetric") {
  auto s = CounterStream::keyed(15, {});
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double a = testutil::log_uniform(s, 0.05, 500.0);
    const double b = testutil::log_uniform(s, 0.05, 500.0);
    REQUIRE(beta_entropy(a, b) == beta_entropy(b, a));
    worst = std::max(worst, std::abs(beta_entropy(a, b) - oracle::quadrature_beta_entropy(a, b)));
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("integrate_01") {
  CHECK(std::abs(integrate_01([](double) { return 1.0; }) - 1.0) < 1e-12);
  CHECK(std::abs(integrate_01([](double p) { return -p * std::log(p); }) - 0.25) < 1e-12);
  CHECK(std::abs(integrate_01([](double p, double q) { return 6.0 * p * q; }) - 1.0) < 1e-12);
  // p^(-0.95): steepest endpoint singularity in the supported range.
  CHECK(std::abs(integrate_01([](double p) { return std::pow(p, -0.95); }) - 20.0) < 1e-8);
}

TEST_CASE("integrate_01 reports non-convergence with its best estimate") {
  try {
    integrate_01([](double p) { return 1.0 / p; }, {1e-10, 4});
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(std::isfinite(e.estimate()));
    CHECK(e.error_bound() > 1e-10);
  }
  CHECK_THROWS_AS(integrate_01([](double) { return 1.0; }, {0.0, 4}), DomainError);
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(log_gamma(0.0), DomainError);
  CHECK_THROWS_AS(log_gamma(-1.0), DomainError);
  CHECK_THROWS_AS(log_gamma(std::nan("")), DomainError);
  CHECK_THROWS_AS(digamma(0.0), DomainError);
  CHECK_THROWS_AS(log_beta(1.0, -2.0), DomainError);
  CHECK_THROWS_AS(beta_entropy(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(log_gamma(std::numeric_limits<double>::infinity()), DomainError);
}

TEST_SUITE_END();
