#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "beaq/acquisition.hpp"

namespace beaq::tools {

struct CheckResult {
  std::string name;
  bool passed = false;
  bool informational = false;  // reported, never fails the run
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct BatteryOptions {
  std::uint64_t seed = 0;
  /// Replaces digamma inside the closed-form BALD / aleatoric paths. Used by
  /// the negative control; the quadrature references never see it.
  DigammaFn digamma = nullptr;
  std::size_t workers = 0;
};

/// Digamma with a small non-constant error, for the negative control.
double perturbed_digamma(double x);

std::vector<CheckResult> run_oracle_battery(const BatteryOptions& options);

/// "PASS name measured=... tol=... detail" (INFO for informational rows).
std::string format_check(const CheckResult& r);

}  // namespace beaq::tools
