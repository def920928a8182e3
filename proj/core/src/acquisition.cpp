#include "beaq/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "beaq/error.hpp"
#include "beaq/parallel.hpp"
#include "beaq/random.hpp"

namespace beaq {
namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr double kReciprocalFloor = 1e-12;
constexpr double kBaldFloor = 1e-12;
constexpr double kRenormalizeReportThreshold = 1e-3;
constexpr double kMinDenominator = 1e-9;

struct NamedMeasure {
  Measure measure;
  std::string_view name;
};

constexpr NamedMeasure kMeasureNames[] = {
    {Measure::kRandom, "random"},
    {Measure::kEntropy, "entropy"},
    {Measure::kMcBald, "mc_bald"},
    {Measure::kBetaMarginalBald, "beta_marginal_bald"},
    {Measure::kMeanSd, "mean_sd"},
    {Measure::kVarRatio, "var_ratio"},
    {Measure::kPowerBald, "power_bald"},
    {Measure::kExpectedEffectiveLoss, "expected_effective_loss"},
    {Measure::kBetaMarginalEig, "beta_marginal_eig"},
    {Measure::kAleatoric, "aleatoric"},
    {Measure::kMjent, "mjent"},
    {Measure::kBalent, "balent"},
    {Measure::kBalentAcq, "balentacq"},
    {Measure::kMjentAcq, "mjentacq"},
};

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

double posterior_and_entropy(PointMarginals m, double* entropy) {
  const ExpectedProbs q = expected_probs(m);
  double post = 0.0;
  for (std::size_t i = 0; i < m.n_classes(); ++i) {
    post += q.probs[i] * specfun::beta_entropy(m.alpha[i] + 1.0, m.beta[i]);
  }
  *entropy = shannon_entropy(q.probs);
  return post;
}

double posterior_printed_sign(PointMarginals m, double* entropy) {
  const ExpectedProbs q = expected_probs(m);
  double post = 0.0;
  for (std::size_t i = 0; i < m.n_classes(); ++i) {
    const double a = m.alpha[i];
    const double b = m.beta[i];
    const double h = specfun::log_beta(a + 1.0, b) - a * specfun::digamma(a + 1.0) -
                     (b - 1.0) * specfun::digamma(b) -
                     (a + b - 1.0) * specfun::digamma(a + b + 1.0);
    post += q.probs[i] * h;
  }
  *entropy = shannon_entropy(q.probs);
  return post;
}

}  // namespace

std::string_view measure_name(Measure m) {
  for (const auto& entry : kMeasureNames) {
    if (entry.measure == m) return entry.name;
  }
  return "unknown";
}

Measure parse_measure(std::string_view name) {
  for (const auto& entry : kMeasureNames) {
    if (entry.name == name) return entry.measure;
  }
  throw ConfigError("unknown measure '" + std::string(name) + "'");
}

bool is_randomized(Measure m) { return m == Measure::kRandom || m == Measure::kPowerBald; }

std::string_view priority_name(Priority p) {
  switch (p) {
    case Priority::kP1:
      return "P1";
    case Priority::kP2:
      return "P2";
    case Priority::kP3:
      return "P3";
  }
  return "P2";
}

Priority parse_priority(std::string_view name) {
  if (name == "P1" || name == "p1") return Priority::kP1;
  if (name == "P2" || name == "p2") return Priority::kP2;
  if (name == "P3" || name == "p3") return Priority::kP3;
  throw ConfigError("unknown priority '" + std::string(name) + "' (expected P1, P2 or P3)");
}

ExpectedProbs expected_probs(PointMarginals m) {
  ExpectedProbs out;
  out.probs.resize(m.n_classes());
  double sum = 0.0;
  for (std::size_t i = 0; i < m.n_classes(); ++i) {
    out.probs[i] = m.alpha[i] / (m.alpha[i] + m.beta[i]);
    sum += out.probs[i];
  }
  out.raw_sum = sum;
  out.renormalized = std::abs(sum - 1.0) > kRenormalizeReportThreshold;
  for (double& p : out.probs) p /= sum;
  return out;
}

double shannon_entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) h -= xlogx(p);
  return h;
}

double entropy_acq(PointMarginals m) { return shannon_entropy(expected_probs(m).probs); }

double mc_bald(const DrawMatrix& draws) {
  const std::size_t n_classes = draws.n_classes;
  std::vector<double> mean(n_classes, 0.0);
  double conditional = 0.0;
  for (std::size_t d = 0; d < draws.n_draws; ++d) {
    const auto row = draws.draw(d);
    for (std::size_t c = 0; c < n_classes; ++c) {
      mean[c] += row[c];
      conditional -= xlogx(row[c]);
    }
  }
  const double inv = 1.0 / static_cast<double>(draws.n_draws);
  for (double& v : mean) v *= inv;
  return std::max(0.0, shannon_entropy(mean) - conditional * inv);
}

double beta_marginal_bald(PointMarginals m, DigammaFn digamma) {
  double value = entropy_acq(m);
  for (std::size_t i = 0; i < m.n_classes(); ++i) {
    const double a = m.alpha[i];
    const double b = m.beta[i];
    const double s = a + b;
    const double psi_s1 = digamma(s + 1.0);
    value += (a - 1.0) * digamma(s);
    value -= a * (a - 1.0) / s * digamma(a);
    value -= b * (a - 1.0) / s * psi_s1;
    value += a * a / s * (digamma(a + 1.0) - psi_s1);
  }
  return value;
}

double aleatoric(PointMarginals m, DigammaFn digamma) {
  double value = 0.0;
  for (std::size_t i = 0; i < m.n_classes(); ++i) {
    const double a = m.alpha[i];
    const double b = m.beta[i];
    const double s = a + b;
    const double psi_s1 = digamma(s + 1.0);
    value -= (a - 1.0) * digamma(s);
    value += a * (a - 1.0) / s * digamma(a);
    value += b * (a - 1.0) / s * psi_s1;
    value -= a * a / s * (digamma(a + 1.0) - psi_s1);
  }
  return value;
}

double mean_sd(PointMarginals m) {
  double total = 0.0;
  for (std::size_t i = 0; i < m.n_classes(); ++i) {
    const double a = m.alpha[i];
    const double b = m.beta[i];
    const double s = a + b;
    total += std::sqrt(a * b / (s * s * (s + 1.0)));
  }
  return total / static_cast<double>(m.n_classes());
}

double var_ratio(PointMarginals m) {
  const ExpectedProbs q = expected_probs(m);
  return 1.0 - *std::max_element(q.probs.begin(), q.probs.end());
}

double power_bald_from_uniform(double bald_value, double u) {
  return std::log(std::max(bald_value, kBaldFloor)) - std::log(-std::log(u));
}

double power_bald(double bald_value, std::uint64_t seed, std::uint64_t point) {
  auto stream = CounterStream::keyed(seed, {point, tag(StreamTag::kPowerBald)});
  return power_bald_from_uniform(bald_value, stream.uniform_open());
}

double expected_effective_loss(PointMarginals m) {
  double total = 0.0;
  for (std::size_t i = 0; i < m.n_classes(); ++i) {
    const double a = m.alpha[i];
    const double s = a + m.beta[i];
    const double mean = a / s;
    // log((a+1)/(s+1)) - log(a/s) = log1p(b / (a (s+1))).
    total += mean * std::log1p(m.beta[i] / (a * (s + 1.0)));
  }
  return total;
}

double beta_marginal_eig(PointMarginals m) {
  const ExpectedProbs q = expected_probs(m);
  const std::size_t n = m.n_classes();
  double expected_posterior_entropy = 0.0;
  std::vector<double> posterior(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      posterior[j] = (m.alpha[j] + (i == j ? 1.0 : 0.0)) / (m.alpha[j] + m.beta[j] + 1.0);
      sum += posterior[j];
    }
    for (double& p : posterior) p /= sum;
    expected_posterior_entropy += q.probs[i] * shannon_entropy(posterior);
  }
  return shannon_entropy(q.probs) - expected_posterior_entropy;
}

double posterior_uncertainty(PointMarginals m) {
  double entropy = 0.0;
  return posterior_and_entropy(m, &entropy);
}

double mjent(PointMarginals m) {
  double entropy = 0.0;
  const double post = posterior_and_entropy(m, &entropy);
  return post + entropy;
}

double mjent_equivalent_form(PointMarginals m) {
  const ExpectedProbs q = expected_probs(m);
  double total = 0.0;
  for (std::size_t i = 0; i < m.n_classes(); ++i) {
    const double mi = q.probs[i];
    if (mi <= 0.0) continue;
    total += mi * (specfun::beta_entropy(m.alpha[i] + 1.0, m.beta[i]) - std::log(mi));
  }
  return total;
}

double mjent_printed_sign(PointMarginals m) {
  double entropy = 0.0;
  const double post = posterior_printed_sign(m, &entropy);
  return post + entropy;
}

double balent_ratio(double posterior, double entropy, int precision_case) {
  if (precision_case < -1 || precision_case > 3) {
    throw ConfigError("precision_case must be in [-1, 3], got " + std::to_string(precision_case));
  }
  const double k = static_cast<double>(precision_case);
  const double denominator = entropy + k * kLn2;
  if (!(denominator >= kMinDenominator)) {
    throw DegenerateDenominatorError("BalEnt denominator H(Y) + " + std::to_string(precision_case) +
                                     " ln 2 = " + std::to_string(denominator) + " is degenerate");
  }
  return (posterior + entropy + (k - 1.0) * kLn2) / denominator;
}

double balent(PointMarginals m, const BalEntOptions& options, MjentForm form) {
  double entropy = 0.0;
  const double post = form == MjentForm::kStandard ? posterior_and_entropy(m, &entropy)
                                                   : posterior_printed_sign(m, &entropy);
  return balent_ratio(post, entropy, options.precision_case);
}

double balentacq_transform(double v, Priority priority) {
  switch (priority) {
    case Priority::kP1:
      return -v;
    case Priority::kP3:
      return v;
    case Priority::kP2:
      break;
  }
  return v >= 0.0 ? 1.0 / std::max(v, kReciprocalFloor) : v;
}

double balentacq(PointMarginals m, const BalEntOptions& options, MjentForm form) {
  return balentacq_transform(balent(m, options, form), options.priority);
}

double mjentacq_transform(double u) { return u >= 0.0 ? 1.0 / std::max(u, kReciprocalFloor) : u; }

double mjentacq(PointMarginals m) { return mjentacq_transform(mjent(m)); }

double random_acq(std::uint64_t seed, std::uint64_t point) {
  auto stream = CounterStream::keyed(seed, {point, tag(StreamTag::kRandomScore)});
  return stream.uniform();
}

PointScorer::PointScorer(const DrawMatrix& draws, const ClampConfig& clamp)
    : draws_(draws), alpha_(draws.n_classes), beta_(draws.n_classes) {
  fit_point(draws, clamp, alpha_, beta_);
}

namespace {

double score_from_marginals(PointMarginals m, Measure measure, const ScoreOptions& options,
                            std::uint64_t seed, std::uint64_t point_id) {
  switch (measure) {
    case Measure::kRandom:
      return random_acq(seed, point_id);
    case Measure::kEntropy:
      return entropy_acq(m);
    case Measure::kBetaMarginalBald:
      return beta_marginal_bald(m);
    case Measure::kMeanSd:
      return mean_sd(m);
    case Measure::kVarRatio:
      return var_ratio(m);
    case Measure::kPowerBald:
      return power_bald(beta_marginal_bald(m), seed, point_id);
    case Measure::kExpectedEffectiveLoss:
      return expected_effective_loss(m);
    case Measure::kBetaMarginalEig:
      return beta_marginal_eig(m);
    case Measure::kAleatoric:
      return aleatoric(m);
    case Measure::kMjent:
      return options.mjent_form == MjentForm::kStandard ? mjent(m) : mjent_printed_sign(m);
    case Measure::kBalent:
      return balent(m, options.balent, options.mjent_form);
    case Measure::kBalentAcq:
      return balentacq(m, options.balent, options.mjent_form);
    case Measure::kMjentAcq:
      return mjentacq_transform(options.mjent_form == MjentForm::kStandard
                                    ? mjent(m)
                                    : mjent_printed_sign(m));
    case Measure::kMcBald:
      break;
  }
  throw DomainError("measure '" + std::string(measure_name(measure)) +
                    "' needs the raw MC draws, not fitted marginals");
}

bool needs_draws(Measure measure, const ScoreOptions& options) {
  return measure == Measure::kMcBald ||
         (measure == Measure::kPowerBald &&
          options.power_bald_source == PowerBaldSource::kMonteCarlo);
}

}  // namespace

double PointScorer::score(Measure measure, const ScoreOptions& options, std::uint64_t seed,
                          std::uint64_t point_id) const {
  if (measure == Measure::kMcBald) return mc_bald(draws_);
  if (measure == Measure::kPowerBald && options.power_bald_source == PowerBaldSource::kMonteCarlo) {
    return power_bald(mc_bald(draws_), seed, point_id);
  }
  return score_from_marginals(marginals(), measure, options, seed, point_id);
}

AcquisitionScores score_pool(const SampleTensor& samples, Measure measure,
                             const ScoreOptions& options, std::uint64_t seed,
                             std::size_t workers, std::span<const std::uint64_t> point_ids) {
  const std::size_t n = samples.n_points();
  if (!point_ids.empty() && point_ids.size() != n) {
    throw DomainError("score_pool: point_ids length does not match the pool");
  }
  AcquisitionScores out;
  out.measure = measure;
  if (measure == Measure::kBalent || measure == Measure::kBalentAcq) out.options = options.balent;
  if (is_randomized(measure)) out.seed = seed;
  out.score.resize(n);

  parallel_for(
      n,
      [&](std::size_t i) {
        const std::uint64_t id = point_ids.empty() ? i : point_ids[i];
        const DrawMatrix draws = samples.point(i);
        if (measure == Measure::kRandom) {
          out.score[i] = random_acq(seed, id);
          return;
        }
        if (measure == Measure::kMcBald) {
          out.score[i] = mc_bald(draws);
          return;
        }
        try {
          const PointScorer scorer(draws, options.clamp);
          out.score[i] = scorer.score(measure, options, seed, id);
        } catch (const InsufficientDrawsError&) {
          throw;
        } catch (const DataError& e) {
          throw DataError("point " + std::to_string(i) + ": " + e.what());
        }
      },
      workers);
  return out;
}

AcquisitionScores score_marginals(const BetaMarginals& marginals, Measure measure,
                                  const ScoreOptions& options, std::uint64_t seed,
                                  std::size_t workers) {
  if (needs_draws(measure, options)) {
    throw DomainError("measure '" + std::string(measure_name(measure)) +
                      "' needs the raw MC draws, not fitted marginals");
  }
  AcquisitionScores out;
  out.measure = measure;
  if (measure == Measure::kBalent || measure == Measure::kBalentAcq) out.options = options.balent;
  if (is_randomized(measure)) out.seed = seed;
  out.score.resize(marginals.n_points());
  parallel_for(
      marginals.n_points(),
      [&](std::size_t i) {
        out.score[i] = score_from_marginals(marginals.point(i), measure, options, seed, i);
      },
      workers);
  return out;
}

}  // namespace beaq
