#include "beaq/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "beaq/error.hpp"
#include "beaq/parallel.hpp"
#include "beaq/random.hpp"

namespace beaq::oracle {
namespace {

using specfun::digamma;
using specfun::log_beta;

double mean_of(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - mu) * (x - mu);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

double entropy_of_row(std::span<const double> p) {
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return h;
}

void sample_dirichlet(CounterStream& stream, std::span<const double> eta, std::span<double> out) {
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < eta.size(); ++c) {
    out[c] = stream.log_gamma_variate(eta[c]);
    max_log = std::max(max_log, out[c]);
  }
  double sum = 0.0;
  for (double& v : out) {
    v = std::exp(v - max_log);
    sum += v;
  }
  for (double& v : out) v /= sum;
}

}  // namespace

double dirichlet_bald(std::span<const double> eta) {
  const std::size_t n = eta.size();
  if (n < 2) throw DomainError("dirichlet_bald: need at least 2 concentrations");
  double total = 0.0;
  for (double e : eta) {
    if (!(e > 0.0) || !std::isfinite(e)) {
      throw DomainError("dirichlet_bald: concentrations must be positive and finite");
    }
    total += e;
  }
  const double psi_total = digamma(total);
  const double psi_total1 = digamma(total + 1.0);

  std::vector<double> psi(n);
  std::vector<double> ratio(n);
  for (std::size_t i = 0; i < n; ++i) {
    psi[i] = digamma(eta[i]);
    // B(eta + e_i) / B(eta): every Gamma(eta_k), k != i, cancels and
    // Gamma(x + 1) = x Gamma(x) leaves eta_i / S. Taking the exp of a log-Beta
    // difference instead loses ~1e-10 absolute, which the S psi(S) terms
    // below amplify by S at large concentrations.
    ratio[i] = eta[i] / total;
  }

  double value = (total - static_cast<double>(n)) * psi_total;
  for (std::size_t i = 0; i < n; ++i) {
    const double mean = eta[i] / total;
    value -= (eta[i] - 1.0) * psi[i];
    value -= mean * std::log(mean);
  }
  for (std::size_t i = 0; i < n; ++i) {
    double cross = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      cross += (eta[j] - 1.0) * (psi[j] - psi_total1);
    }
    value += ratio[i] * cross;
    value += eta[i] * ratio[i] * (digamma(eta[i] + 1.0) - psi_total1);
  }
  return value;
}

double quadrature_digamma(double x, const specfun::QuadratureSpec& spec) {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("quadrature_digamma: x must be positive");
  if (x < 1.0) return quadrature_digamma(x + 1.0, spec) - 1.0 / x;
  const double integral = specfun::integrate_01(
      [x](double t, double q) {
        const double log_t = t > 0.5 ? std::log1p(-q) : std::log(t);
        return -std::expm1((x - 1.0) * log_t) / q;
      },
      spec);
  return integral - std::numbers::egamma;
}

double quadrature_log_beta(double a, double b, const specfun::QuadratureSpec& spec) {
  const double pm = a / (a + b);
  const double scale = (a - 1.0) * std::log(pm) + (b - 1.0) * std::log1p(-pm);
  const double integral = specfun::integrate_01(
      [=](double p, double q) { return std::exp((a - 1.0) * std::log(p) + (b - 1.0) * std::log(q) - scale); },
      spec);
  return scale + std::log(integral);
}

double quadrature_beta_entropy(double a, double b, const specfun::QuadratureSpec& spec) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("quadrature_beta_entropy: a, b must be > 0");
  const double log_norm = log_beta(a, b);
  return specfun::integrate_01(
      [=](double p, double q) {
        const double log_f = (a - 1.0) * std::log(p) + (b - 1.0) * std::log(q) - log_norm;
        return -std::exp(log_f) * log_f;
      },
      spec);
}

double quadrature_mjent(PointMarginals m, const specfun::QuadratureSpec& spec) {
  double total = 0.0;
  for (std::size_t i = 0; i < m.n_classes(); ++i) {
    const double a = m.alpha[i];
    const double b = m.beta[i];
    const double log_norm = log_beta(a, b);
    // g(p) = p f(p); integrand -g ln g.
    total += specfun::integrate_01(
        [=](double p, double q) {
          const double log_g = a * std::log(p) + (b - 1.0) * std::log(q) - log_norm;
          return -std::exp(log_g) * log_g;
        },
        spec);
  }
  return total;
}

double quadrature_aleatoric(PointMarginals m, const specfun::QuadratureSpec& spec) {
  double total = 0.0;
  for (std::size_t i = 0; i < m.n_classes(); ++i) {
    const double a = m.alpha[i];
    const double b = m.beta[i];
    const double log_norm = log_beta(a, b);
    total += specfun::integrate_01(
        [=](double p, double q) {
          const double log_p = std::log(p);
          const double log_f = (a - 1.0) * log_p + (b - 1.0) * std::log(q) - log_norm;
          return -p * log_p * std::exp(log_f);
        },
        spec);
  }
  return total;
}

McEstimate mc_dirichlet_bald(std::span<const double> eta, std::size_t n_draws,
                             std::uint64_t seed) {
  if (n_draws < 2) throw DomainError("mc_dirichlet_bald: need at least 2 draws");
  const double total = std::accumulate(eta.begin(), eta.end(), 0.0);
  std::vector<double> mean(eta.size());
  for (std::size_t c = 0; c < eta.size(); ++c) mean[c] = eta[c] / total;
  const double marginal_entropy = entropy_of_row(mean);

  auto stream = CounterStream::keyed(seed, {tag(StreamTag::kPoolDraws)});
  std::vector<double> row(eta.size());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t d = 0; d < n_draws; ++d) {
    sample_dirichlet(stream, eta, row);
    const double h = entropy_of_row(row);
    sum += h;
    sum_sq += h * h;
  }
  const double n = static_cast<double>(n_draws);
  const double mean_h = sum / n;
  const double var_h = std::max(0.0, (sum_sq - n * mean_h * mean_h) / (n - 1.0));
  return {marginal_entropy - mean_h, std::sqrt(var_h / n)};
}

void validate(const SyntheticPoolSpec& spec) {
  if (spec.n_points == 0) throw DomainError("synthetic pool: n_points must be positive");
  if (spec.n_draws < 2) throw DomainError("synthetic pool: moment fitting needs n_draws >= 2");
  if (spec.n_classes < 2) throw DomainError("synthetic pool: n_classes must be >= 2");
  if (spec.kind == PoolKind::kDirichlet &&
      !(spec.log_concentration_max >= spec.log_concentration_min)) {
    throw DomainError("synthetic pool: empty concentration range");
  }
  if (spec.kind == PoolKind::kSoftmaxGaussian &&
      (!(spec.logit_mean_sd >= 0.0) || !(spec.logit_noise_sd >= 0.0))) {
    throw DomainError("synthetic pool: logit scales must be non-negative");
  }
}

void generate_point(const SyntheticPoolSpec& spec, std::uint64_t repeat, std::uint64_t point,
                    std::span<double> out) {
  const std::size_t n_classes = spec.n_classes;
  if (out.size() != spec.n_draws * n_classes) {
    throw DomainError("generate_point: output span has the wrong size");
  }
  auto stream = CounterStream::keyed(spec.seed, {repeat, point, tag(StreamTag::kPoolDraws)});
  if (spec.kind == PoolKind::kDirichlet) {
    std::vector<double> eta(n_classes);
    const double width = spec.log_concentration_max - spec.log_concentration_min;
    for (double& e : eta) e = std::exp(spec.log_concentration_min + width * stream.uniform());
    for (std::size_t d = 0; d < spec.n_draws; ++d) {
      sample_dirichlet(stream, eta, out.subspan(d * n_classes, n_classes));
    }
    return;
  }
  std::vector<double> mean_logits(n_classes);
  for (double& v : mean_logits) v = spec.logit_mean_sd * stream.normal();
  for (std::size_t d = 0; d < spec.n_draws; ++d) {
    auto row = out.subspan(d * n_classes, n_classes);
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n_classes; ++c) {
      row[c] = mean_logits[c] + spec.logit_noise_sd * stream.normal();
      max_logit = std::max(max_logit, row[c]);
    }
    double sum = 0.0;
    for (double& v : row) {
      v = std::exp(v - max_logit);
      sum += v;
    }
    for (double& v : row) v /= sum;
  }
}

SampleTensor generate_pool(const SyntheticPoolSpec& spec, std::uint64_t repeat) {
  validate(spec);
  const std::size_t stride = spec.n_draws * spec.n_classes;
  std::vector<double> values(spec.n_points * stride);
  parallel_for(spec.n_points, [&](std::size_t n) {
    generate_point(spec, repeat, n, std::span<double>(values).subspan(n * stride, stride));
  });
  return SampleTensor(spec.n_points, spec.n_draws, spec.n_classes, std::move(values));
}

std::vector<double> average_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("spearman: length mismatch");
  if (x.size() < 3) throw DomainError("spearman: need at least 3 values");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double mx = mean_of(rx);
  const double my = mean_of(ry);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw DomainError("spearman: undefined correlation (constant ranks)");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

const CorrelationPair* CorrelationReport::find(Measure a, Measure b) const {
  for (const auto& p : pairs) {
    if ((p.a == a && p.b == b) || (p.a == b && p.b == a)) return &p;
  }
  return nullptr;
}

CorrelationReport rank_correlation_study(const SyntheticPoolSpec& spec,
                                         std::span<const Measure> measures, std::size_t repeats,
                                         const ScoreOptions& options, std::size_t workers) {
  validate(spec);
  if (spec.n_points < 3) throw DomainError("rank_correlation_study: need at least 3 points");
  if (repeats == 0) throw DomainError("rank_correlation_study: repeats must be >= 1");
  CorrelationReport report;
  report.n_points = spec.n_points;
  report.n_classes = spec.n_classes;
  report.repeats = repeats;
  for (std::size_t i = 0; i < measures.size(); ++i) {
    for (std::size_t j = i + 1; j < measures.size(); ++j) {
      report.pairs.push_back({measures[i], measures[j], {}, 0.0, 0.0});
    }
  }

  const std::size_t stride = spec.n_draws * spec.n_classes;
  for (std::size_t r = 0; r < repeats; ++r) {
    // scores[k][n]: measure k at point n
    std::vector<std::vector<double>> scores(measures.size(), std::vector<double>(spec.n_points));
    parallel_for(
        spec.n_points,
        [&](std::size_t n) {
          std::vector<double> buffer(stride);
          generate_point(spec, r, n, buffer);
          const PointScorer scorer({buffer, spec.n_draws, spec.n_classes}, options.clamp);
          for (std::size_t k = 0; k < measures.size(); ++k) {
            scores[k][n] = scorer.score(measures[k], options, spec.seed ^ r, n);
          }
        },
        workers);
    std::size_t pair = 0;
    for (std::size_t i = 0; i < measures.size(); ++i) {
      for (std::size_t j = i + 1; j < measures.size(); ++j) {
        report.pairs[pair++].rho.push_back(spearman(scores[i], scores[j]));
      }
    }
  }
  for (auto& p : report.pairs) {
    p.rho_mean = mean_of(p.rho);
    p.rho_sd = sample_sd(p.rho);
  }
  return report;
}

double rmse(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw DomainError("rmse: length mismatch or empty");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(acc / static_cast<double>(x.size()));
}

RmseReport rmse_study(const SyntheticPoolSpec& spec, std::size_t repeats, const ClampConfig& clamp,
                      std::size_t workers) {
  validate(spec);
  if (repeats == 0) throw DomainError("rmse_study: repeats must be >= 1");
  RmseReport report;
  const std::size_t stride = spec.n_draws * spec.n_classes;
  for (std::size_t r = 0; r < repeats; ++r) {
    std::vector<double> mc(spec.n_points);
    std::vector<double> beta(spec.n_points);
    parallel_for(
        spec.n_points,
        [&](std::size_t n) {
          std::vector<double> buffer(stride);
          generate_point(spec, r, n, buffer);
          const DrawMatrix draws{buffer, spec.n_draws, spec.n_classes};
          const PointScorer scorer(draws, clamp);
          mc[n] = mc_bald(draws);
          beta[n] = beta_marginal_bald(scorer.marginals());
        },
        workers);
    report.rmse.push_back(rmse(mc, beta));
    report.rho.push_back(spearman(mc, beta));
  }
  report.rmse_mean = mean_of(report.rmse);
  report.rho_mean = mean_of(report.rho);
  return report;
}

}  // namespace beaq::oracle
