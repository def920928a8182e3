#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "beaq/beta_model.hpp"
#include "beaq/sample_tensor.hpp"
#include "beaq/specfun.hpp"

namespace beaq {

enum class Measure {
  kRandom,
  kEntropy,
  kMcBald,
  kBetaMarginalBald,
  kMeanSd,
  kVarRatio,
  kPowerBald,
  kExpectedEffectiveLoss,
  kBetaMarginalEig,
  kAleatoric,
  kMjent,
  kBalent,
  kBalentAcq,
  kMjentAcq,
};

inline constexpr Measure kAllMeasures[] = {
    Measure::kRandom,         Measure::kEntropy,   Measure::kMcBald,
    Measure::kBetaMarginalBald, Measure::kMeanSd,  Measure::kVarRatio,
    Measure::kPowerBald,      Measure::kExpectedEffectiveLoss,
    Measure::kBetaMarginalEig, Measure::kAleatoric, Measure::kMjent,
    Measure::kBalent,         Measure::kBalentAcq, Measure::kMjentAcq,
};

std::string_view measure_name(Measure m);
/// Throws ConfigError on unknown names.
Measure parse_measure(std::string_view name);
/// True for measures that draw from a counter-based stream.
bool is_randomized(Measure m);

/// How BalEnt is turned into a ranking score.
///  P1: -BalEnt; P2: reciprocal on BalEnt >= 0, identity below; P3: BalEnt.
enum class Priority { kP1, kP2, kP3 };

std::string_view priority_name(Priority p);
Priority parse_priority(std::string_view name);

struct BalEntOptions {
  Priority priority = Priority::kP2;
  /// Precision offset k: the denominator is H(Y) + k ln 2. k = 1 is the
  /// standard BalEnt; k in {-1, 0, 2, 3} are the alternative precision levels.
  int precision_case = 1;
};

enum class PowerBaldSource { kMonteCarlo, kBetaMarginal };
/// kPrintedSign evaluates the fully expanded MJEnt with the opposite sign on
/// the (alpha+beta-1) psi(alpha+beta+1) term. Debug comparison only.
enum class MjentForm { kStandard, kPrintedSign };

struct ScoreOptions {
  BalEntOptions balent;
  PowerBaldSource power_bald_source = PowerBaldSource::kMonteCarlo;
  MjentForm mjent_form = MjentForm::kStandard;
  ClampConfig clamp;
};

using DigammaFn = double (*)(double);

// ---- per-point measures ---------------------------------------------------

struct ExpectedProbs {
  std::vector<double> probs;  // alpha / (alpha + beta), renormalized to sum 1
  double raw_sum = 1.0;       // sum before renormalization
  bool renormalized = false;  // |raw_sum - 1| > 1e-3
};

ExpectedProbs expected_probs(PointMarginals m);

/// Shannon entropy in nats, 0 ln 0 := 0.
double shannon_entropy(std::span<const double> probs);

double entropy_acq(PointMarginals m);

/// H(mean draw) - mean H(draw), clipped at 0.
double mc_bald(const DrawMatrix& draws);

/// Closed-form mutual information from Beta marginals (five digamma sums).
/// The -sum m log m term is H(Y) over the renormalized means.
double beta_marginal_bald(PointMarginals m, DigammaFn digamma = specfun::digamma);

/// Closed-form expected conditional entropy E[H(Y | omega)] from Beta
/// marginals (four digamma sums). beta_marginal_bald + aleatoric equals
/// entropy_acq.
double aleatoric(PointMarginals m, DigammaFn digamma = specfun::digamma);

double mean_sd(PointMarginals m);
double var_ratio(PointMarginals m);

/// log(max(bald, 1e-12)) + G, G standard Gumbel from the stream keyed by
/// (seed, point, power_bald tag).
double power_bald(double bald_value, std::uint64_t seed, std::uint64_t point);
/// Same with the Gumbel uniform supplied: G = -ln(-ln u).
double power_bald_from_uniform(double bald_value, double u);

double expected_effective_loss(PointMarginals m);
double beta_marginal_eig(PointMarginals m);

/// sum_i m_i h(Beta(alpha_i + 1, beta_i)); always <= 0.
double posterior_uncertainty(PointMarginals m);

/// posterior_uncertainty + H(Y).
double mjent(PointMarginals m);
/// sum_i m_i [h(P_i^+) - log m_i]; algebraically equal to mjent.
double mjent_equivalent_form(PointMarginals m);
/// Expanded MJEnt with the alternative sign on the psi(alpha+beta+1) term.
double mjent_printed_sign(PointMarginals m);

/// (post + H + (k-1) ln 2) / (H + k ln 2). Throws DegenerateDenominatorError
/// when the denominator is below 1e-9, and ConfigError for k outside [-1, 3].
double balent_ratio(double posterior_uncertainty, double entropy, int precision_case);
double balent(PointMarginals m, const BalEntOptions& options = {},
              MjentForm form = MjentForm::kStandard);

double balentacq_transform(double balent_value, Priority priority);
double balentacq(PointMarginals m, const BalEntOptions& options = {},
                 MjentForm form = MjentForm::kStandard);

double mjentacq_transform(double mjent_value);
double mjentacq(PointMarginals m);

/// Uniform [0, 1) from the stream keyed by (seed, point, random tag).
double random_acq(std::uint64_t seed, std::uint64_t point);

// ---- pool scoring ---------------------------------------------------------

struct AcquisitionScores {
  Measure measure = Measure::kEntropy;
  std::optional<BalEntOptions> options;
  std::optional<std::uint64_t> seed;
  std::vector<double> score;
};

/// Fits one point's marginals once and evaluates any measure on them.
class PointScorer {
 public:
  PointScorer(const DrawMatrix& draws, const ClampConfig& clamp);

  PointMarginals marginals() const { return {alpha_, beta_}; }
  const DrawMatrix& draws() const { return draws_; }

  /// `point_id` keys the random streams of randomized measures.
  double score(Measure measure, const ScoreOptions& options, std::uint64_t seed,
               std::uint64_t point_id) const;

 private:
  DrawMatrix draws_;
  std::vector<double> alpha_;
  std::vector<double> beta_;
};

/// Per-point scores for one measure over the whole pool. Data-parallel;
/// output is identical for any worker count. `point_ids`, when given,
/// replaces the row index as the random-stream key (length must be N).
AcquisitionScores score_pool(const SampleTensor& samples, Measure measure,
                             const ScoreOptions& options = {}, std::uint64_t seed = 0,
                             std::size_t workers = 0,
                             std::span<const std::uint64_t> point_ids = {});

/// Scores from already-fitted marginals. Throws DomainError for measures
/// that need the raw draws (mc_bald, and power_bald with the MC source).
AcquisitionScores score_marginals(const BetaMarginals& marginals, Measure measure,
                                  const ScoreOptions& options = {}, std::uint64_t seed = 0,
                                  std::size_t workers = 0);

}  // namespace beaq
