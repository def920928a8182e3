#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "beaq/sample_tensor.hpp"

namespace beaq {

/// Clamping policy for degenerate moments. Sample moments of softmax draws
/// can sit exactly on the boundary of what a Beta law can represent (zero
/// variance, or variance m(1-m) for 0/1 draws); these bounds keep every
/// fitted Beta proper and every downstream entropy finite.
struct ClampConfig {
  double mean_eps = 1e-6;      // mean clamped into [mean_eps, 1 - mean_eps]
  double variance_eps = 1e-12; // variance floor
  double ratio_eps = 1e-6;     // variance ceiling is mean (1 - mean) (1 - ratio_eps)
  double param_min = 1e-4;     // alpha, beta clamped into [param_min, param_max]
  double param_max = 1e6;
};

/// Bit set recording which clamp fired for one (point, class).
enum ClampFlag : std::uint8_t {
  kClampNone = 0,
  kVarianceFloor = 1u << 0,
  kVarianceCeiling = 1u << 1,
  kMeanFloor = 1u << 2,
  kMeanCeiling = 1u << 3,
  kParameterCap = 1u << 4,  // alpha or beta hit [param_min, param_max]
};

struct MomentPair {
  double mean = 0.0;
  double variance = 0.0;
};

struct MomentEstimate {
  MomentPair moments;  // after clamping
  std::uint8_t flags = kClampNone;
};

struct BetaParams {
  double alpha = 1.0;
  double beta = 1.0;
};

/// Per-class view of one point's fitted marginals.
struct PointMarginals {
  std::span<const double> alpha;
  std::span<const double> beta;
  std::size_t n_classes() const { return alpha.size(); }
};

/// Mean and biased (1/M) variance per class, two-pass, then clamped.
/// `out` must have n_classes entries. Throws InsufficientDrawsError when
/// M < 2 and DataError on NaN input.
void estimate_point_moments(const DrawMatrix& draws, const ClampConfig& config,
                            std::span<MomentEstimate> out);

/// Moment grid for a whole pool, row-major (point, class).
std::vector<MomentEstimate> estimate_moments(const SampleTensor& samples,
                                             const ClampConfig& config = {});

/// Moment-matched Beta parameters:
///   alpha = m^2 (1 - m) / s^2 - m,  beta = (1/m - 1) alpha,
/// then clamped into [param_min, param_max]. Sets kParameterCap in *flags
/// when a cap fires.
BetaParams fit_beta(const MomentPair& moments, const ClampConfig& config = {},
                    std::uint8_t* flags = nullptr);

/// Fitted (alpha, beta) per (point, class) plus the clamped moments and
/// clamp flags that produced them. Immutable once built.
class BetaMarginals {
 public:
  BetaMarginals() = default;
  BetaMarginals(std::size_t n_points, std::size_t n_classes, std::vector<double> alpha,
                std::vector<double> beta, std::vector<MomentEstimate> moments);

  /// Marginals given directly as parameters (no moment provenance).
  static BetaMarginals from_params(std::size_t n_points, std::size_t n_classes,
                                   std::vector<double> alpha, std::vector<double> beta);

  std::size_t n_points() const { return n_points_; }
  std::size_t n_classes() const { return n_classes_; }

  PointMarginals point(std::size_t n) const {
    return {std::span<const double>(alpha_).subspan(n * n_classes_, n_classes_),
            std::span<const double>(beta_).subspan(n * n_classes_, n_classes_)};
  }
  double alpha(std::size_t n, std::size_t c) const { return alpha_[n * n_classes_ + c]; }
  double beta(std::size_t n, std::size_t c) const { return beta_[n * n_classes_ + c]; }
  const MomentEstimate& moments(std::size_t n, std::size_t c) const {
    return moments_[n * n_classes_ + c];
  }
  std::uint8_t flags(std::size_t n, std::size_t c) const { return moments(n, c).flags; }

  friend bool operator==(const BetaMarginals& a, const BetaMarginals& b) {
    return a.n_points_ == b.n_points_ && a.n_classes_ == b.n_classes_ && a.alpha_ == b.alpha_ &&
           a.beta_ == b.beta_;
  }

 private:
  std::size_t n_points_ = 0;
  std::size_t n_classes_ = 0;
  std::vector<double> alpha_;
  std::vector<double> beta_;
  std::vector<MomentEstimate> moments_;
};

/// Fits one point's marginals from its draws. Spans must have n_classes
/// entries; `moments` may be empty when provenance is not needed.
void fit_point(const DrawMatrix& draws, const ClampConfig& config, std::span<double> alpha,
               std::span<double> beta, std::span<MomentEstimate> moments = {});

/// estimate_moments + fit_beta over the pool, data-parallel over points.
BetaMarginals fit_pool(const SampleTensor& samples, const ClampConfig& config = {},
                       std::size_t workers = 0);

/// Fraction of (point, class) cells where each clamp fired.
struct ClampRates {
  double variance_floor = 0.0;
  double variance_ceiling = 0.0;
  double mean_floor = 0.0;
  double mean_ceiling = 0.0;
  double parameter_cap = 0.0;
};
ClampRates clamp_rates(const BetaMarginals& marginals);

}  // namespace beaq
