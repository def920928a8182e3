#include "beaq/beta_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "beaq/error.hpp"
#include "beaq/parallel.hpp"

namespace beaq {

void estimate_point_moments(const DrawMatrix& draws, const ClampConfig& config,
                            std::span<MomentEstimate> out) {
  const std::size_t n_draws = draws.n_draws;
  const std::size_t n_classes = draws.n_classes;
  if (n_draws < 2) {
    throw InsufficientDrawsError("moment estimation needs at least 2 draws, got " +
                                 std::to_string(n_draws));
  }
  std::vector<double> mean(n_classes, 0.0);
  for (std::size_t m = 0; m < n_draws; ++m) {
    const auto row = draws.draw(m);
    for (std::size_t c = 0; c < n_classes; ++c) {
      if (std::isnan(row[c])) {
        throw DataError("NaN probability at (draw " + std::to_string(m) + ", class " +
                        std::to_string(c) + ")");
      }
      mean[c] += row[c];
    }
  }
  const double inv_m = 1.0 / static_cast<double>(n_draws);
  for (double& v : mean) v *= inv_m;

  std::vector<double> sq(n_classes, 0.0);
  std::vector<double> dev(n_classes, 0.0);
  for (std::size_t m = 0; m < n_draws; ++m) {
    const auto row = draws.draw(m);
    for (std::size_t c = 0; c < n_classes; ++c) {
      const double d = row[c] - mean[c];
      dev[c] += d;
      sq[c] += d * d;
    }
  }

  for (std::size_t c = 0; c < n_classes; ++c) {
    // Corrected two-pass: subtracts the rounding residue of the mean.
    double variance = (sq[c] - dev[c] * dev[c] * inv_m) * inv_m;
    double m = mean[c];
    std::uint8_t flags = kClampNone;
    if (m < config.mean_eps) {
      m = config.mean_eps;
      flags |= kMeanFloor;
    } else if (m > 1.0 - config.mean_eps) {
      m = 1.0 - config.mean_eps;
      flags |= kMeanCeiling;
    }
    const double ceiling = m * (1.0 - m) * (1.0 - config.ratio_eps);
    if (variance < config.variance_eps) {
      variance = config.variance_eps;
      flags |= kVarianceFloor;
    } else if (variance > ceiling) {
      variance = ceiling;
      flags |= kVarianceCeiling;
    }
    out[c] = {{m, variance}, flags};
  }
}

std::vector<MomentEstimate> estimate_moments(const SampleTensor& samples,
                                             const ClampConfig& config) {
  std::vector<MomentEstimate> grid(samples.n_points() * samples.n_classes());
  const std::size_t c = samples.n_classes();
  for (std::size_t n = 0; n < samples.n_points(); ++n) {
    estimate_point_moments(samples.point(n), config,
                           std::span<MomentEstimate>(grid).subspan(n * c, c));
  }
  return grid;
}

BetaParams fit_beta(const MomentPair& moments, const ClampConfig& config, std::uint8_t* flags) {
  const double m = moments.mean;
  const double v = moments.variance;
  double alpha = m * m * (1.0 - m) / v - m;
  double beta = (1.0 / m - 1.0) * alpha;
  bool capped = false;
  auto clamp = [&](double x) {
    if (!(x >= config.param_min)) {
      capped = true;
      return config.param_min;
    }
    if (x > config.param_max) {
      capped = true;
      return config.param_max;
    }
    return x;
  };
  alpha = clamp(alpha);
  beta = clamp(beta);
  if (capped && flags != nullptr) *flags |= kParameterCap;
  return {alpha, beta};
}

BetaMarginals::BetaMarginals(std::size_t n_points, std::size_t n_classes,
                             std::vector<double> alpha, std::vector<double> beta,
                             std::vector<MomentEstimate> moments)
    : n_points_(n_points),
      n_classes_(n_classes),
      alpha_(std::move(alpha)),
      beta_(std::move(beta)),
      moments_(std::move(moments)) {
  const std::size_t cells = n_points_ * n_classes_;
  if (alpha_.size() != cells || beta_.size() != cells || moments_.size() != cells) {
    throw DomainError("BetaMarginals: array sizes do not match shape");
  }
}

BetaMarginals BetaMarginals::from_params(std::size_t n_points, std::size_t n_classes,
                                         std::vector<double> alpha, std::vector<double> beta) {
  std::vector<MomentEstimate> moments(alpha.size());
  for (std::size_t i = 0; i < alpha.size() && i < beta.size(); ++i) {
    const double a = alpha[i];
    const double b = beta[i];
    if (!(a > 0.0) || !(b > 0.0)) throw DomainError("Beta parameters must be positive");
    const double s = a + b;
    moments[i].moments = {a / s, a * b / (s * s * (s + 1.0))};
  }
  return BetaMarginals(n_points, n_classes, std::move(alpha), std::move(beta),
                       std::move(moments));
}

void fit_point(const DrawMatrix& draws, const ClampConfig& config, std::span<double> alpha,
               std::span<double> beta, std::span<MomentEstimate> moments) {
  std::vector<MomentEstimate> local;
  if (moments.empty()) {
    local.resize(draws.n_classes);
    moments = local;
  }
  estimate_point_moments(draws, config, moments);
  for (std::size_t c = 0; c < draws.n_classes; ++c) {
    const BetaParams p = fit_beta(moments[c].moments, config, &moments[c].flags);
    alpha[c] = p.alpha;
    beta[c] = p.beta;
  }
}

BetaMarginals fit_pool(const SampleTensor& samples, const ClampConfig& config,
                       std::size_t workers) {
  const std::size_t n = samples.n_points();
  const std::size_t c = samples.n_classes();
  std::vector<double> alpha(n * c);
  std::vector<double> beta(n * c);
  std::vector<MomentEstimate> moments(n * c);
  parallel_for(
      n,
      [&](std::size_t i) {
        try {
          fit_point(samples.point(i), config, std::span<double>(alpha).subspan(i * c, c),
                    std::span<double>(beta).subspan(i * c, c),
                    std::span<MomentEstimate>(moments).subspan(i * c, c));
        } catch (const InsufficientDrawsError&) {
          throw;
        } catch (const DataError& e) {
          throw DataError("point " + std::to_string(i) + ": " + e.what());
        }
      },
      workers);
  return BetaMarginals(n, c, std::move(alpha), std::move(beta), std::move(moments));
}

ClampRates clamp_rates(const BetaMarginals& marginals) {
  ClampRates rates;
  const std::size_t cells = marginals.n_points() * marginals.n_classes();
  if (cells == 0) return rates;
  for (std::size_t n = 0; n < marginals.n_points(); ++n) {
    for (std::size_t c = 0; c < marginals.n_classes(); ++c) {
      const auto f = marginals.flags(n, c);
      rates.variance_floor += (f & kVarianceFloor) ? 1.0 : 0.0;
      rates.variance_ceiling += (f & kVarianceCeiling) ? 1.0 : 0.0;
      rates.mean_floor += (f & kMeanFloor) ? 1.0 : 0.0;
      rates.mean_ceiling += (f & kMeanCeiling) ? 1.0 : 0.0;
      rates.parameter_cap += (f & kParameterCap) ? 1.0 : 0.0;
    }
  }
  const double inv = 1.0 / static_cast<double>(cells);
  rates.variance_floor *= inv;
  rates.variance_ceiling *= inv;
  rates.mean_floor *= inv;
  rates.mean_ceiling *= inv;
  rates.parameter_cap *= inv;
  return rates;
}

}  // namespace beaq
