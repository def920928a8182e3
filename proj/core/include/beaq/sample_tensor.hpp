#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace beaq {

/// Read-only view of one point's Monte-Carlo softmax draws, row-major
/// (draw, class).
struct DrawMatrix {
  std::span<const double> values;
  std::size_t n_draws = 0;
  std::size_t n_classes = 0;

  double at(std::size_t draw, std::size_t cls) const { return values[draw * n_classes + cls]; }
  std::span<const double> draw(std::size_t m) const {
    return values.subspan(m * n_classes, n_classes);
  }
};

/// Pool of MC softmax draws, shape (points x draws x classes), row-major.
/// Construction validates the simplex invariant.
class SampleTensor {
 public:
  static constexpr double kRowSumTolerance = 1e-6;

  SampleTensor() = default;

  /// Throws DataError naming the first NaN / out-of-range entry or the first
  /// (point, draw) whose row does not sum to 1, and DomainError on a shape
  /// mismatch or fewer than two classes.
  SampleTensor(std::size_t n_points, std::size_t n_draws, std::size_t n_classes,
               std::vector<double> values);

  std::size_t n_points() const { return n_points_; }
  std::size_t n_draws() const { return n_draws_; }
  std::size_t n_classes() const { return n_classes_; }

  double at(std::size_t point, std::size_t draw, std::size_t cls) const {
    return values_[(point * n_draws_ + draw) * n_classes_ + cls];
  }
  DrawMatrix point(std::size_t n) const {
    const std::size_t stride = n_draws_ * n_classes_;
    return {std::span<const double>(values_).subspan(n * stride, stride), n_draws_, n_classes_};
  }
  std::span<const double> values() const { return values_; }

  /// New tensor holding the listed points in the given order.
  SampleTensor select_points(std::span<const std::size_t> indices) const;

  friend bool operator==(const SampleTensor&, const SampleTensor&) = default;

 private:
  std::size_t n_points_ = 0;
  std::size_t n_draws_ = 0;
  std::size_t n_classes_ = 0;
  std::vector<double> values_;
};

/// Validates one point's draws; used by streaming producers that never build
/// a full tensor. `point` only labels the error message.
void validate_draws(const DrawMatrix& draws, std::size_t point);

}  // namespace beaq
