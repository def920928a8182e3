#include "beaq/mlp.hpp"

#include <bit>
#include <cmath>
#include <numeric>

#include "beaq/error.hpp"
#include "beaq/io.hpp"
#include "beaq/parallel.hpp"
#include "beaq/random.hpp"

namespace beaq::sim {
namespace {

constexpr std::string_view kModelMagic = "BEAQM1";
constexpr std::uint16_t kModelVersion = 1;

struct Shape {
  int rows, cols;
};

constexpr Shape kShapes[MlpModel::kParamCount] = {
    {MlpModel::kInputs, MlpModel::kHidden}, {1, MlpModel::kHidden},
    {MlpModel::kHidden, MlpModel::kHidden}, {1, MlpModel::kHidden},
    {MlpModel::kHidden, MlpModel::kHidden}, {1, MlpModel::kHidden},
    {MlpModel::kHidden, MlpModel::kClasses},
};

constexpr int kFanIn[MlpModel::kParamCount] = {
    MlpModel::kInputs, MlpModel::kInputs, MlpModel::kHidden, MlpModel::kHidden,
    MlpModel::kHidden, MlpModel::kHidden, MlpModel::kHidden,
};

std::uint32_t keep_threshold(double p) {
  return static_cast<std::uint32_t>(std::min(p, 1.0) * 4294967295.0);
}

void fill_mask_row(CounterStream& stream, std::uint32_t threshold, double scale, double* row, int n) {
  for (int j = 0; j < n; ++j) row[j] = stream.next_u32() >= threshold ? scale : 0.0;
}

double relu(double v) { return v > 0.0 ? v : 0.0; }

void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(std::string_view in, std::size_t& offset, int bytes) {
  if (offset + bytes > in.size()) {
    throw FormatError("model file: truncated at byte " + std::to_string(offset), offset);
  }
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  }
  offset += bytes;
  return v;
}

struct Activations {
  Matrix z1, a1, d2, a2, d3, a3, logits;
};

Activations run_forward(const MlpModel& model, const Matrix& x, const DropoutMasks& masks) {
  const auto& p = model.params();
  Activations act;
  act.z1 = (x * p[MlpModel::kW1]).rowwise() + p[MlpModel::kB1].row(0);
  act.a1 = act.z1.unaryExpr(&relu);
  act.d2 = ((act.a1 * p[MlpModel::kW2]).rowwise() + p[MlpModel::kB2].row(0)).cwiseProduct(masks.layer2);
  act.a2 = act.d2.unaryExpr(&relu);
  act.d3 = ((act.a2 * p[MlpModel::kW3]).rowwise() + p[MlpModel::kB3].row(0)).cwiseProduct(masks.layer3);
  act.a3 = act.d3.unaryExpr(&relu);
  act.logits = act.a3 * p[MlpModel::kW4];
  return act;
}

Matrix relu_grad(const Matrix& pre) {
  return pre.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

}  // namespace

MlpModel::MlpModel() {
  for (const auto& s : kShapes) params_.push_back(Matrix::Zero(s.rows, s.cols));
}

MlpModel MlpModel::initialize(std::uint64_t seed, double dropout) {
  MlpModel model;
  model.set_dropout(dropout);
  for (int k = 0; k < kParamCount; ++k) {
    auto stream = CounterStream::keyed(seed, {tag(StreamTag::kInit), static_cast<std::uint64_t>(k)});
    const double bound = 1.0 / std::sqrt(static_cast<double>(kFanIn[k]));
    auto& m = model.params_[k];
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = bound * (2.0 * stream.uniform() - 1.0);
  }
  return model;
}

void MlpModel::set_dropout(double p) {
  if (!(p >= 0.0 && p < 1.0)) throw DomainError("dropout rate must be in [0, 1)");
  dropout_ = p;
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& m : params_) n += static_cast<std::size_t>(m.size());
  return n;
}

bool MlpModel::finite() const {
  for (const auto& m : params_) {
    if (!m.allFinite()) return false;
  }
  return true;
}

bool operator==(const MlpModel& a, const MlpModel& b) {
  if (a.dropout_ != b.dropout_) return false;
  for (int k = 0; k < MlpModel::kParamCount; ++k) {
    if (a.params_[k] != b.params_[k]) return false;
  }
  return true;
}

DropoutMasks sample_masks(std::size_t rows, double p, std::uint64_t seed,
                          std::initializer_list<std::uint64_t> path) {
  DropoutMasks masks{Matrix(rows, MlpModel::kHidden), Matrix(rows, MlpModel::kHidden)};
  CounterStream stream(seed, stream_id(path));
  const auto threshold = keep_threshold(p);
  const double scale = 1.0 / (1.0 - p);
  for (std::size_t r = 0; r < rows; ++r) {
    fill_mask_row(stream, threshold, scale, masks.layer2.row(r).data(), MlpModel::kHidden);
    fill_mask_row(stream, threshold, scale, masks.layer3.row(r).data(), MlpModel::kHidden);
  }
  return masks;
}

DropoutMasks identity_masks(std::size_t rows) {
  return {Matrix::Ones(rows, MlpModel::kHidden), Matrix::Ones(rows, MlpModel::kHidden)};
}

Matrix forward_logits(const MlpModel& model, const Matrix& x, const DropoutMasks& masks) {
  if (x.cols() != MlpModel::kInputs) throw DomainError("forward: inputs must have 2 columns");
  return run_forward(model, x, masks).logits;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double mx = logits.row(r).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      out(r, c) = std::exp(logits(r, c) - mx);
      sum += out(r, c);
    }
    out.row(r) /= sum;
  }
  return out;
}

Matrix predict_proba(const MlpModel& model, const Matrix& x) {
  return softmax_rows(forward_logits(model, x, identity_masks(static_cast<std::size_t>(x.rows()))));
}

double loss_and_gradient(const MlpModel& model, const Matrix& x, std::span<const int> labels,
                         const DropoutMasks& masks, std::vector<Matrix>* grad) {
  const auto rows = x.rows();
  if (rows == 0 || static_cast<std::size_t>(rows) != labels.size()) {
    throw DomainError("loss: batch and labels differ in size or are empty");
  }
  const auto act = run_forward(model, x, masks);
  double loss = 0.0;
  Matrix dlogits(rows, MlpModel::kClasses);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const int y = labels[r];
    if (y < 0 || y >= MlpModel::kClasses) throw DomainError("loss: label out of range");
    const double mx = act.logits.row(r).maxCoeff();
    double sum = 0.0;
    for (int c = 0; c < MlpModel::kClasses; ++c) sum += std::exp(act.logits(r, c) - mx);
    const double log_z = mx + std::log(sum);
    loss += log_z - act.logits(r, y);
    for (int c = 0; c < MlpModel::kClasses; ++c) {
      dlogits(r, c) = std::exp(act.logits(r, c) - log_z) - (c == y ? 1.0 : 0.0);
    }
  }
  const double inv = 1.0 / static_cast<double>(rows);
  loss *= inv;
  if (grad == nullptr) return loss;

  const auto& p = model.params();
  grad->resize(MlpModel::kParamCount);
  auto& g = *grad;
  dlogits *= inv;
  g[MlpModel::kW4] = act.a3.transpose() * dlogits;
  Matrix dz3 = (dlogits * p[MlpModel::kW4].transpose()).cwiseProduct(relu_grad(act.d3)).cwiseProduct(masks.layer3);
  g[MlpModel::kW3] = act.a2.transpose() * dz3;
  g[MlpModel::kB3] = dz3.colwise().sum();
  Matrix dz2 = (dz3 * p[MlpModel::kW3].transpose()).cwiseProduct(relu_grad(act.d2)).cwiseProduct(masks.layer2);
  g[MlpModel::kW2] = act.a1.transpose() * dz2;
  g[MlpModel::kB2] = dz2.colwise().sum();
  Matrix dz1 = (dz2 * p[MlpModel::kW2].transpose()).cwiseProduct(relu_grad(act.z1));
  g[MlpModel::kW1] = x.transpose() * dz1;
  g[MlpModel::kB1] = dz1.colwise().sum();
  return loss;
}

void validate(const TrainConfig& config) {
  if (config.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(config.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(config.beta1 >= 0.0 && config.beta1 < 1.0) || !(config.beta2 >= 0.0 && config.beta2 < 1.0)) {
    throw ConfigError("Adam decay rates must be in [0, 1)");
  }
  if (!(config.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
}

TrainReport train(MlpModel& model, const Matrix& x, std::span<const int> labels,
                  const TrainConfig& config) {
  validate(config);
  const std::size_t n = labels.size();
  if (n == 0 || static_cast<std::size_t>(x.rows()) != n) {
    throw DomainError("train: empty training set or label count mismatch");
  }
  TrainReport report;
  const auto full_masks = identity_masks(n);
  report.initial_loss = loss_and_gradient(model, x, labels, full_masks, nullptr);

  auto& params = model.params();
  std::vector<Matrix> m1, m2, grad;
  for (const auto& p : params) {
    m1.push_back(Matrix::Zero(p.rows(), p.cols()));
    m2.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
  std::vector<std::size_t> order(n);
  Matrix batch_x;
  std::vector<int> batch_y;
  double decay1 = 1.0, decay2 = 1.0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    auto shuffle = CounterStream::keyed(config.seed, {tag(StreamTag::kShuffle), epoch});
    for (std::size_t i = n - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(shuffle.uniform() * static_cast<double>(i + 1));
      std::swap(order[i], order[std::min(j, i)]);
    }
    for (std::size_t start = 0, batch = 0; start < n; start += config.batch_size, ++batch) {
      const std::size_t rows = std::min(config.batch_size, n - start);
      batch_x.resize(static_cast<Eigen::Index>(rows), MlpModel::kInputs);
      batch_y.resize(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        batch_x.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(order[start + r]));
        batch_y[r] = labels[order[start + r]];
      }
      const auto masks = sample_masks(rows, model.dropout(), config.seed,
                                      {tag(StreamTag::kDropout), epoch, batch});
      const double loss = loss_and_gradient(model, batch_x, batch_y, masks, &grad);
      if (!std::isfinite(loss)) {
        throw TrainingError("training diverged at epoch " + std::to_string(epoch) + " (loss not finite)");
      }
      decay1 *= config.beta1;
      decay2 *= config.beta2;
      const double step = config.learning_rate / (1.0 - decay1);
      const double corr2 = 1.0 / (1.0 - decay2);
      for (int k = 0; k < MlpModel::kParamCount; ++k) {
        m1[k] = config.beta1 * m1[k] + (1.0 - config.beta1) * grad[k];
        m2[k] = config.beta2 * m2[k] + (1.0 - config.beta2) * grad[k].cwiseAbs2();
        params[k].array() -=
            step * m1[k].array() / ((m2[k].array() * corr2).sqrt() + config.epsilon);
      }
      ++report.steps;
    }
  }
  report.final_loss = loss_and_gradient(model, x, labels, full_masks, nullptr);
  if (!std::isfinite(report.final_loss) || !model.finite()) {
    throw TrainingError("training produced non-finite parameters");
  }
  return report;
}

void mc_forward_point(const MlpModel& model, double x, double y, std::size_t m_draws,
                      std::uint64_t seed, std::uint64_t point_id, std::span<double> out) {
  constexpr int kH = MlpModel::kHidden;
  if (out.size() != m_draws * MlpModel::kClasses) throw DomainError("mc_forward_point: bad output size");
  const auto& p = model.params();
  // Everything before the first dropout is shared by all draws.
  Eigen::Matrix<double, 1, MlpModel::kInputs> in(x, y);
  const Eigen::RowVectorXd a1 = ((in * p[MlpModel::kW1]) + p[MlpModel::kB1]).unaryExpr(&relu);
  const Eigen::RowVectorXd z2 = a1 * p[MlpModel::kW2] + p[MlpModel::kB2];

  const auto threshold = keep_threshold(model.dropout());
  const double scale = 1.0 / (1.0 - model.dropout());
  // One draw at a time through the same buffers, so a draw's value never
  // depends on its row position in a blocked matrix product.
  Eigen::Matrix<double, 1, kH> mask2, mask3, a2, a3;
  Eigen::Matrix<double, 1, MlpModel::kClasses> logits;
  for (std::size_t d = 0; d < m_draws; ++d) {
    auto stream = CounterStream::keyed(seed, {tag(StreamTag::kDropout), point_id, d});
    fill_mask_row(stream, threshold, scale, mask2.data(), kH);
    fill_mask_row(stream, threshold, scale, mask3.data(), kH);
    a2 = z2.cwiseProduct(mask2).unaryExpr(&relu);
    a3.noalias() = a2 * p[MlpModel::kW3];
    a3 = (a3 + p[MlpModel::kB3].row(0)).cwiseProduct(mask3).unaryExpr(&relu);
    logits.noalias() = a3 * p[MlpModel::kW4];
    const double mx = logits.maxCoeff();
    double sum = 0.0;
    double* row = out.data() + d * MlpModel::kClasses;
    for (int c = 0; c < MlpModel::kClasses; ++c) sum += row[c] = std::exp(logits[c] - mx);
    for (int c = 0; c < MlpModel::kClasses; ++c) row[c] /= sum;
  }
}

SampleTensor mc_forward(const MlpModel& model, const Matrix& points, std::size_t m_draws,
                        std::uint64_t seed, std::span<const std::uint64_t> point_ids,
                        std::size_t workers) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (points.cols() != MlpModel::kInputs) throw DomainError("mc_forward: points must have 2 columns");
  if (!point_ids.empty() && point_ids.size() != n) throw DomainError("mc_forward: point_ids length mismatch");
  if (m_draws == 0) throw DomainError("mc_forward: m_draws must be positive");
  const std::size_t stride = m_draws * MlpModel::kClasses;
  std::vector<double> values(n * stride);
  parallel_for(
      n,
      [&](std::size_t i) {
        const auto row = static_cast<Eigen::Index>(i);
        mc_forward_point(model, points(row, 0), points(row, 1), m_draws, seed,
                         point_ids.empty() ? i : point_ids[i],
                         std::span<double>(values).subspan(i * stride, stride));
      },
      workers);
  return SampleTensor(n, m_draws, MlpModel::kClasses, std::move(values));
}

std::string encode_model(const MlpModel& model) {
  std::string out(kModelMagic);
  put_le(out, kModelVersion, 2);
  put_le(out, std::bit_cast<std::uint64_t>(model.dropout()), 8);
  put_le(out, MlpModel::kParamCount, 4);
  for (const auto& m : model.params()) {
    put_le(out, static_cast<std::uint64_t>(m.rows()), 4);
    put_le(out, static_cast<std::uint64_t>(m.cols()), 4);
    for (Eigen::Index i = 0; i < m.size(); ++i) put_le(out, std::bit_cast<std::uint64_t>(m.data()[i]), 8);
  }
  return out;
}

MlpModel decode_model(std::string_view bytes) {
  if (bytes.substr(0, kModelMagic.size()) != kModelMagic) {
    throw FormatError("model file: bad magic at byte 0", 0);
  }
  std::size_t offset = kModelMagic.size();
  if (get_le(bytes, offset, 2) != kModelVersion) throw FormatError("model file: unsupported version at byte 6", 6);
  MlpModel model;
  const std::size_t dropout_at = offset;
  const double dropout = std::bit_cast<double>(get_le(bytes, offset, 8));
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw FormatError("model file: dropout out of range at byte " + std::to_string(dropout_at), dropout_at);
  }
  model.set_dropout(dropout);
  const std::size_t count_at = offset;
  if (get_le(bytes, offset, 4) != MlpModel::kParamCount) {
    throw FormatError("model file: wrong tensor count at byte " + std::to_string(count_at), count_at);
  }
  for (int k = 0; k < MlpModel::kParamCount; ++k) {
    const std::size_t shape_at = offset;
    const auto rows = get_le(bytes, offset, 4);
    const auto cols = get_le(bytes, offset, 4);
    if (rows != static_cast<std::uint64_t>(kShapes[k].rows) || cols != static_cast<std::uint64_t>(kShapes[k].cols)) {
      throw FormatError("model file: unexpected tensor shape at byte " + std::to_string(shape_at), shape_at);
    }
    auto& m = model.params()[k];
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = std::bit_cast<double>(get_le(bytes, offset, 8));
  }
  if (offset != bytes.size()) {
    throw FormatError("model file: trailing data at byte " + std::to_string(offset), offset);
  }
  if (!model.finite()) throw DataError("model file: non-finite parameter");
  return model;
}

void save_model(const std::filesystem::path& path, const MlpModel& model) {
  io::write_atomic(path, encode_model(model));
}

MlpModel load_model(const std::filesystem::path& path) { return decode_model(io::read_file(path)); }

}  // namespace beaq::sim
