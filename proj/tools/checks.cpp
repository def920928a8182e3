#include "checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <vector>

#include "beaq/error.hpp"
#include "beaq/oracle.hpp"
#include "beaq/random.hpp"
#include "beaq/specfun.hpp"

namespace beaq::tools {
namespace {

struct Marginals {
  std::vector<double> alpha, beta;
  PointMarginals view() const { return {alpha, beta}; }
};

double log_uniform(CounterStream& s, double lo, double hi) {
  return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * s.uniform());
}

// Means on the simplex, per-class concentration nu: alpha = m nu, beta = (1 - m) nu.
Marginals coherent_marginals(CounterStream& s, std::size_t c, double nu_lo, double nu_hi) {
  std::vector<double> w(c);
  double total = 0.0;
  for (double& v : w) total += (v = log_uniform(s, 0.05, 1.0));
  Marginals m;
  for (double v : w) {
    const double nu = log_uniform(s, nu_lo, nu_hi);
    m.alpha.push_back(v / total * nu);
    m.beta.push_back((1.0 - v / total) * nu);
  }
  return m;
}

Marginals random_marginals(CounterStream& s, std::size_t c, double lo, double hi) {
  Marginals m;
  for (std::size_t i = 0; i < c; ++i) {
    m.alpha.push_back(log_uniform(s, lo, hi));
    m.beta.push_back(log_uniform(s, lo, hi));
  }
  return m;
}

CheckResult check_max(std::string name, double measured, double tolerance, std::string detail = {}) {
  return {std::move(name), measured <= tolerance, false, measured, tolerance, std::move(detail)};
}

}  // namespace

double perturbed_digamma(double x) { return specfun::digamma(x) + 1e-4 * std::log1p(x); }

std::vector<CheckResult> run_oracle_battery(const BatteryOptions& options) {
  const DigammaFn psi = options.digamma != nullptr ? options.digamma : &specfun::digamma;
  std::vector<CheckResult> out;

  {
    auto s = CounterStream::keyed(options.seed, {1});
    double err_psi = 0.0, err_lb = 0.0, err_h = 0.0;
    for (int i = 0; i < 200; ++i) {
      const double a = log_uniform(s, 0.05, 500.0);
      const double b = log_uniform(s, 0.05, 500.0);
      err_psi = std::max(err_psi, std::abs(specfun::digamma(a) - oracle::quadrature_digamma(a)));
      err_lb = std::max(err_lb, std::abs(specfun::log_beta(a, b) - oracle::quadrature_log_beta(a, b)));
      err_h = std::max(err_h, std::abs(specfun::beta_entropy(a, b) - oracle::quadrature_beta_entropy(a, b)));
    }
    out.push_back(check_max("digamma_vs_quadrature", err_psi, 1e-6, "200 random a in [0.05, 500]"));
    out.push_back(check_max("log_beta_vs_quadrature", err_lb, 1e-6, "200 random (a, b)"));
    out.push_back(check_max("beta_entropy_vs_quadrature", err_h, 1e-6, "200 random (a, b)"));
  }

  {
    auto s = CounterStream::keyed(options.seed, {2});
    double err = 0.0;
    for (std::size_t c : {2u, 10u, 100u}) {
      for (int i = 0; i < 300; ++i) {
        const auto m = random_marginals(s, c, 0.05, 50.0);
        const double lhs = beta_marginal_bald(m.view(), psi) + aleatoric(m.view(), psi);
        err = std::max(err, std::abs(lhs - entropy_acq(m.view())));
      }
    }
    out.push_back(check_max("decomposition_closed_form", err, 1e-9, "900 sets, C in {2, 10, 100}"));
  }

  {
    // Epistemic part from the closed form, aleatoric part from quadrature.
    auto s = CounterStream::keyed(options.seed, {3});
    double err = 0.0;
    for (std::size_t c : {2u, 5u, 10u}) {
      for (int i = 0; i < 20; ++i) {
        const auto m = random_marginals(s, c, 0.2, 50.0);
        const double quad = oracle::quadrature_aleatoric(m.view());
        err = std::max(err, std::abs(entropy_acq(m.view()) - beta_marginal_bald(m.view(), psi) - quad));
      }
    }
    out.push_back(check_max("decomposition_vs_quadrature", err, 1e-8, "60 sets, C in {2, 5, 10}"));
  }

  {
    auto s = CounterStream::keyed(options.seed, {4});
    double err = 0.0;
    for (std::size_t c : {2u, 5u, 10u, 100u}) {
      for (int i = 0; i < 50; ++i) {
        std::vector<double> eta(c), beta(c);
        double total = 0.0;
        for (double& e : eta) total += (e = log_uniform(s, 0.1, 10.0));
        for (std::size_t k = 0; k < c; ++k) beta[k] = total - eta[k];
        err = std::max(err, std::abs(beta_marginal_bald({eta, beta}, psi) - oracle::dirichlet_bald(eta)));
      }
    }
    out.push_back(check_max("dirichlet_consistency", err, 1e-10, "200 eta, C in {2, 5, 10, 100}"));
  }

  {
    const std::vector<double> one{1.0, 1.0};
    const PointMarginals u{one, one};
    const double ln2 = std::numbers::ln2;
    const struct {
      const char* name;
      double got, want;
    } values[] = {
        {"bald", beta_marginal_bald(u, psi), ln2 - 0.5},
        {"mjent", mjent(u), 0.5},
        {"balent", balent(u), 0.5 / (2.0 * ln2)},
        {"balentacq", balentacq(u), 4.0 * ln2},
        {"expected_effective_loss", expected_effective_loss(u), std::log(4.0 / 3.0)},
        {"eig", beta_marginal_eig(u), 5.0 / 3.0 * ln2 - std::log(3.0)},
        {"aleatoric", aleatoric(u, psi), 0.5},
    };
    double err = 0.0;
    std::string worst;
    for (const auto& v : values) {
      const double e = std::abs(v.got - v.want);
      if (e >= err) {
        err = e;
        worst = v.name;
      }
    }
    out.push_back(check_max("uniform_point_values", err, 1e-9, "largest error: " + worst));
  }

  {
    auto s = CounterStream::keyed(options.seed, {5});
    double err = 0.0, printed = 0.0;
    for (int i = 0; i < 100; ++i) {
      const std::size_t c = 2 + static_cast<std::size_t>(s.uniform() * 9.0);
      const auto m = coherent_marginals(s, c, 1.0, 100.0);
      const double quad = oracle::quadrature_mjent(m.view());
      err = std::max(err, std::abs(mjent(m.view()) - quad));
      printed = std::max(printed, std::abs(mjent_printed_sign(m.view()) - quad));
    }
    out.push_back(check_max("mjent_vs_quadrature", err, 1e-6, "100 random marginal sets"));
    CheckResult info{"mjent_printed_sign_disagreement", true, true, printed, 0.0,
                     "max |printed-sign form - quadrature|"};
    out.push_back(info);
  }

  {
    double worst = 0.0;
    std::uint64_t k = 0;
    for (std::size_t c : {2u, 5u, 10u}) {
      auto s = CounterStream::keyed(options.seed, {6, c});
      for (int i = 0; i < 3; ++i) {
        std::vector<double> eta(c);
        for (double& e : eta) e = log_uniform(s, 0.1, 10.0);
        const auto mc = oracle::mc_dirichlet_bald(eta, 10000, stream_id({options.seed, 7, k++}));
        worst = std::max(worst, std::abs(mc.mean - oracle::dirichlet_bald(eta)) / mc.std_error);
      }
    }
    out.push_back(check_max("dirichlet_bald_vs_mc", worst, 3.0, "in standard errors, M = 10000"));
  }

  {
    oracle::SyntheticPoolSpec spec;
    spec.kind = oracle::PoolKind::kDirichlet;
    spec.n_points = 100;
    spec.n_draws = 10000;
    spec.n_classes = 10;
    spec.seed = options.seed;
    const auto report = oracle::rmse_study(spec, 1, {}, options.workers);
    out.push_back(check_max("rmse_dirichlet_c10", report.rmse_mean, 0.01, "M = 10000"));
    out.push_back({"spearman_dirichlet_c10", report.rho_mean > 0.96, false, report.rho_mean, 0.96,
                   "must exceed tolerance"});
  }
  return out;
}

std::string format_check(const CheckResult& r) {
  char buf[96];
  std::snprintf(buf, sizeof buf, " measured=%.3e tol=%.1e", r.measured, r.tolerance);
  const char* status = r.informational ? "INFO" : (r.passed ? "PASS" : "FAIL");
  std::string line = std::string(status) + " " + r.name;
  if (r.informational) {
    std::snprintf(buf, sizeof buf, " measured=%.6e", r.measured);
  }
  line += buf;
  if (!r.detail.empty()) line += " (" + r.detail + ")";
  return line;
}

}  // namespace beaq::tools
