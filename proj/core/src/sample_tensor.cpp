#include "beaq/sample_tensor.hpp"

#include <cmath>
#include <string>

#include "beaq/error.hpp"

namespace beaq {

void validate_draws(const DrawMatrix& draws, std::size_t point) {
  for (std::size_t m = 0; m < draws.n_draws; ++m) {
    double sum = 0.0;
    for (std::size_t c = 0; c < draws.n_classes; ++c) {
      const double p = draws.at(m, c);
      if (std::isnan(p)) {
        throw DataError("NaN probability at (point " + std::to_string(point) + ", draw " +
                        std::to_string(m) + ", class " + std::to_string(c) + ")");
      }
      if (p < 0.0 || p > 1.0) {
        throw DataError("probability outside [0,1] at (point " + std::to_string(point) +
                        ", draw " + std::to_string(m) + ", class " + std::to_string(c) + ")");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > SampleTensor::kRowSumTolerance) {
      throw DataError("row sum " + std::to_string(sum) + " != 1 at (point " +
                      std::to_string(point) + ", draw " + std::to_string(m) + ")");
    }
  }
}

SampleTensor::SampleTensor(std::size_t n_points, std::size_t n_draws, std::size_t n_classes,
                           std::vector<double> values)
    : n_points_(n_points), n_draws_(n_draws), n_classes_(n_classes), values_(std::move(values)) {
  if (n_classes_ < 2) throw DomainError("SampleTensor: need at least 2 classes");
  if (values_.size() != n_points_ * n_draws_ * n_classes_) {
    throw DomainError("SampleTensor: value count " + std::to_string(values_.size()) +
                      " does not match shape " + std::to_string(n_points_) + "x" +
                      std::to_string(n_draws_) + "x" + std::to_string(n_classes_));
  }
  for (std::size_t n = 0; n < n_points_; ++n) validate_draws(point(n), n);
}

SampleTensor SampleTensor::select_points(std::span<const std::size_t> indices) const {
  const std::size_t stride = n_draws_ * n_classes_;
  std::vector<double> out;
  out.reserve(indices.size() * stride);
  for (std::size_t idx : indices) {
    if (idx >= n_points_) throw DomainError("select_points: index out of range");
    auto row = point(idx).values;
    out.insert(out.end(), row.begin(), row.end());
  }
  SampleTensor t;
  t.n_points_ = indices.size();
  t.n_draws_ = n_draws_;
  t.n_classes_ = n_classes_;
  t.values_ = std::move(out);
  return t;
}

}  // namespace beaq
