#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace beaq {

/// Root of every error thrown by the library. The CLI maps subclasses to
/// exit codes, so new error kinds should derive from one of these.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside a function's mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (NaN probabilities, broken rows,
/// corrupt files).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Fewer Monte-Carlo draws than moment estimation needs.
class InsufficientDrawsError : public DataError {
 public:
  using DataError::DataError;
};

/// Binary or text file that does not follow its format. `offset` is the byte
/// (or line, for text formats) where parsing stopped.
class FormatError : public DataError {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : DataError(what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Quadrature that did not reach its tolerance. Carries the best estimate.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double estimate, double error_bound)
      : Error(what), estimate_(estimate), error_bound_(error_bound) {}
  double estimate() const noexcept { return estimate_; }
  double error_bound() const noexcept { return error_bound_; }

 private:
  double estimate_;
  double error_bound_;
};

/// Selection asked for more points than the pool or budget allows.
class BudgetError : public Error {
 public:
  using Error::Error;
};

/// BalEnt precision variant whose denominator vanished or turned negative.
class DegenerateDenominatorError : public Error {
 public:
  using Error::Error;
};

/// Training diverged (non-finite loss).
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration key or value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace beaq
