#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "beaq/acquisition.hpp"
#include "beaq/beta_model.hpp"
#include "beaq/sample_tensor.hpp"
#include "beaq/specfun.hpp"

// Independent references for the closed-form measures: quadrature, the
// analytic Dirichlet mutual information, Monte-Carlo estimates on synthetic
// pools, and the rank-correlation / RMSE studies built on top of them.
namespace beaq::oracle {

/// Mutual information between a Dirichlet(eta) softmax and its label, in the
/// double-sum form with Gamma-function ratios B(eta + e_i) / B(eta).
double dirichlet_bald(std::span<const double> eta);

/// psi(x) = -gamma + integral_0^1 (1 - t^(x-1)) / (1 - t) dt, shifted
/// up by the recurrence for x < 1.
double quadrature_digamma(double x, const specfun::QuadratureSpec& spec = {});

/// log of integral_0^1 p^(a-1) (1-p)^(b-1) dp, integrand scaled by its value
/// at the mean so that large a, b do not underflow.
double quadrature_log_beta(double a, double b, const specfun::QuadratureSpec& spec = {});

/// -integral f ln f of the Beta(a, b) density by quadrature.
double quadrature_beta_entropy(double a, double b, const specfun::QuadratureSpec& spec = {});

/// Marginalized joint entropy -sum_i E[P_i log(P_i f_i(P_i))] by quadrature
/// of each marginal density. Does not use any closed form.
double quadrature_mjent(PointMarginals m, const specfun::QuadratureSpec& spec = {});

/// Expected conditional label entropy sum_i E[-P_i log P_i] by quadrature.
double quadrature_aleatoric(PointMarginals m, const specfun::QuadratureSpec& spec = {});

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Monte-Carlo mutual information under Dirichlet(eta): exact H(E P) minus
/// the sample mean of H(P) over `n_draws` Dirichlet draws.
McEstimate mc_dirichlet_bald(std::span<const double> eta, std::size_t n_draws,
                             std::uint64_t seed);

enum class PoolKind { kDirichlet, kSoftmaxGaussian };

struct SyntheticPoolSpec {
  PoolKind kind = PoolKind::kSoftmaxGaussian;
  std::size_t n_points = 100;
  std::size_t n_draws = 1000;
  std::size_t n_classes = 10;
  /// Dirichlet: each concentration is log-uniform on [exp(min), exp(max)].
  double log_concentration_min = -2.302585092994046;  // ln 0.1
  double log_concentration_max = 2.302585092994046;   // ln 10
  /// Softmax-Gaussian: per-point mean logits ~ N(0, mean_sd^2 I); each draw
  /// adds N(0, noise_sd^2 I) before the softmax.
  double logit_mean_sd = 3.0;
  double logit_noise_sd = 1.0;
  std::uint64_t seed = 0;
};

/// Throws DomainError on a degenerate spec.
void validate(const SyntheticPoolSpec& spec);

/// Draws for one point into `out` (n_draws x n_classes, row-major). Keyed
/// by (seed, repeat, point): any subset of points can be regenerated alone.
void generate_point(const SyntheticPoolSpec& spec, std::uint64_t repeat, std::uint64_t point,
                    std::span<double> out);

SampleTensor generate_pool(const SyntheticPoolSpec& spec, std::uint64_t repeat = 0);

/// Ranks starting at 1; ties share their average rank.
std::vector<double> average_ranks(std::span<const double> x);

/// Spearman rank correlation with average ranks for ties. Throws
/// DomainError on length mismatch, fewer than 3 values, or constant ranks.
double spearman(std::span<const double> x, std::span<const double> y);

struct CorrelationPair {
  Measure a = Measure::kEntropy;
  Measure b = Measure::kEntropy;
  std::vector<double> rho;  // one per repeat
  double rho_mean = 0.0;
  double rho_sd = 0.0;      // sample sd; 0 with a single repeat
};

struct CorrelationReport {
  std::size_t n_points = 0;
  std::size_t n_classes = 0;
  std::size_t repeats = 0;
  std::vector<CorrelationPair> pairs;

  const CorrelationPair* find(Measure a, Measure b) const;
};

/// For each repeat: generate a pool, score every measure, take Spearman for
/// every unordered pair of requested measures. Points are streamed, so the
/// pool tensor is never materialized.
CorrelationReport rank_correlation_study(const SyntheticPoolSpec& spec,
                                         std::span<const Measure> measures, std::size_t repeats,
                                         const ScoreOptions& options = {},
                                         std::size_t workers = 0);

struct RmseReport {
  std::vector<double> rmse;  // per repeat
  std::vector<double> rho;   // per repeat
  double rmse_mean = 0.0;
  double rho_mean = 0.0;
};

/// RMSE and Spearman between mc_bald and beta_marginal_bald over the pool.
RmseReport rmse_study(const SyntheticPoolSpec& spec, std::size_t repeats,
                      const ClampConfig& clamp = {}, std::size_t workers = 0);

double rmse(std::span<const double> x, std::span<const double> y);

}  // namespace beaq::oracle
