#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "beaq/sample_tensor.hpp"

// Small dropout MLP for the moons demo:
//   Linear(2, 72) ReLU
//   Linear(72, 72) Dropout ReLU
//   Linear(72, 72) Dropout ReLU
//   Linear(72, 3, no bias)
namespace beaq::sim {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class MlpModel {
 public:
  static constexpr int kInputs = 2;
  static constexpr int kHidden = 72;
  static constexpr int kClasses = 3;

  /// Parameter order: W1 b1 W2 b2 W3 b3 W4. Weights are (in x out).
  enum Param { kW1, kB1, kW2, kB2, kW3, kB3, kW4, kParamCount };

  MlpModel();

  /// PyTorch-style default init: every weight and bias uniform on
  /// +-1/sqrt(fan_in).
  static MlpModel initialize(std::uint64_t seed, double dropout = 0.2);

  double dropout() const { return dropout_; }
  void set_dropout(double p);

  std::vector<Matrix>& params() { return params_; }
  const std::vector<Matrix>& params() const { return params_; }
  std::size_t parameter_count() const;
  bool finite() const;

  friend bool operator==(const MlpModel& a, const MlpModel& b);

 private:
  std::vector<Matrix> params_;
  double dropout_ = 0.2;
};

/// Scaled keep masks (0 or 1/(1-p)) for the two dropout layers, one row per
/// batch row.
struct DropoutMasks {
  Matrix layer2;
  Matrix layer3;
};

/// Masks drawn from the stream keyed by `path`.
DropoutMasks sample_masks(std::size_t rows, double p, std::uint64_t seed,
                          std::initializer_list<std::uint64_t> path);
/// All-ones masks: dropout disabled.
DropoutMasks identity_masks(std::size_t rows);

/// Logits for a batch; x is (rows x 2).
Matrix forward_logits(const MlpModel& model, const Matrix& x, const DropoutMasks& masks);
Matrix softmax_rows(const Matrix& logits);
/// Class probabilities with dropout off.
Matrix predict_proba(const MlpModel& model, const Matrix& x);

/// Mean cross-entropy over the batch and, if `grad` is non-null, its
/// gradient with respect to every parameter (same layout as params()).
double loss_and_gradient(const MlpModel& model, const Matrix& x, std::span<const int> labels,
                         const DropoutMasks& masks, std::vector<Matrix>* grad);

struct TrainConfig {
  std::size_t epochs = 150;
  std::size_t batch_size = 128;
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& config);

struct TrainReport {
  double initial_loss = 0.0;  // full-set loss, dropout off, before training
  double final_loss = 0.0;    // same after training
  std::size_t steps = 0;
};

/// Adam on mean cross-entropy with dropout active. Throws TrainingError if
/// the loss stops being finite.
TrainReport train(MlpModel& model, const Matrix& x, std::span<const int> labels,
                  const TrainConfig& config);

/// One point's MC-dropout softmax draws into `out` (m_draws x 3). Draw d
/// uses masks keyed by (seed, point_id, d).
void mc_forward_point(const MlpModel& model, double x, double y, std::size_t m_draws,
                      std::uint64_t seed, std::uint64_t point_id, std::span<double> out);

/// MC-dropout draws for every row of `points`; row i is keyed by
/// point_ids[i] (or i when point_ids is empty).
SampleTensor mc_forward(const MlpModel& model, const Matrix& points, std::size_t m_draws,
                        std::uint64_t seed, std::span<const std::uint64_t> point_ids = {},
                        std::size_t workers = 0);

// Snapshot file: "BEAQM1", u16 version, f64 dropout, u32 tensor count, then
// per tensor u32 rows, u32 cols and row-major little-endian f64 values.
std::string encode_model(const MlpModel& model);
MlpModel decode_model(std::string_view bytes);
void save_model(const std::filesystem::path& path, const MlpModel& model);
MlpModel load_model(const std::filesystem::path& path);

}  // namespace beaq::sim
