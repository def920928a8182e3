#pragma once

#include <cstddef>
#include <functional>

namespace beaq::specfun {

// Real-argument special functions used by the acquisition formulas. All
// functions are pure and throw DomainError on non-positive or non-finite
// arguments.

double log_gamma(double x);

/// psi(x) = d/dx log Gamma(x). Upward recurrence to x >= 6, then the
/// asymptotic Bernoulli series.
double digamma(double x);

/// log B(a, b). Symmetric bit-for-bit in (a, b); uses Stirling-difference
/// corrections when an argument is large so that log B stays accurate even
/// when log Gamma(a + b) is in the thousands.
double log_beta(double a, double b);

/// Differential entropy (nats) of Beta(a, b). Non-positive; zero only at
/// Beta(1, 1).
double beta_entropy(double a, double b);

/// log density of Beta(a, b) at p, with q = 1 - p supplied separately so
/// that points near 1 keep full precision.
double beta_log_density(double a, double b, double p, double q);

struct QuadratureSpec {
  double abs_tol = 1e-10;
  /// Number of step halvings of the double-exponential rule.
  int max_subdivisions = 12;
};

/// Integrand on (0, 1). Receives p and q = 1 - p, both exact to full
/// relative precision (near 0 and near 1 respectively).
using UnitIntegrand = std::function<double(double p, double q)>;

/// Integral over (0, 1) by tanh-sinh quadrature. Nodes cluster double
/// exponentially at both endpoints, so integrable endpoint singularities of
/// the form p^(a-1) (1-p)^(b-1) with a, b >= 0.05 converge. Throws
/// ConvergenceError (with the best estimate) when successive levels still
/// differ by more than spec.abs_tol after spec.max_subdivisions halvings.
double integrate_01(const UnitIntegrand& f, const QuadratureSpec& spec = {});

/// Convenience overload for integrands that only need p.
double integrate_01(const std::function<double(double)>& f,
                    const QuadratureSpec& spec = {});

}  // namespace beaq::specfun
