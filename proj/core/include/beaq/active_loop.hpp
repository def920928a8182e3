#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "beaq/acquisition.hpp"
#include "beaq/sample_tensor.hpp"

namespace beaq {

struct HistoryEntry {
  std::size_t iteration = 0;
  Measure measure = Measure::kBalentAcq;
  std::uint64_t seed = 0;                // seed the scores were computed with
  std::vector<std::size_t> selected;     // pool indices, in selection order
  std::vector<double> scores;            // score of each selected index

  friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

/// Labeled / unlabeled bookkeeping over a pool of `n_total` indices. Both
/// sets are kept sorted ascending; history only grows.
class PoolState {
 public:
  PoolState() = default;
  /// Throws DomainError on an out-of-range or repeated initial index.
  explicit PoolState(std::size_t n_total, std::span<const std::size_t> initial_labeled = {});

  /// Rebuilds a state from its initial labeled set plus history, checking
  /// every invariant on the way. Used when loading state files.
  static PoolState restore(std::size_t n_total, std::span<const std::size_t> initial_labeled,
                           std::vector<HistoryEntry> history);

  std::size_t n_total() const { return n_total_; }
  const std::vector<std::size_t>& labeled() const { return labeled_; }
  const std::vector<std::size_t>& unlabeled() const { return unlabeled_; }
  const std::vector<std::size_t>& initial_labeled() const { return initial_; }
  const std::vector<HistoryEntry>& history() const { return history_; }
  bool is_labeled(std::size_t index) const;

  /// Moves `entry.selected` from unlabeled to labeled and appends the entry.
  /// Throws DomainError if any index is labeled already or out of range.
  void commit(HistoryEntry entry);

  friend bool operator==(const PoolState&, const PoolState&) = default;

 private:
  std::size_t n_total_ = 0;
  std::vector<std::size_t> initial_;
  std::vector<std::size_t> labeled_;
  std::vector<std::size_t> unlabeled_;
  std::vector<HistoryEntry> history_;
};

struct LoopConfig {
  std::size_t k_per_iter = 5;
  /// Labeled-set size at which the loop stops (initial labels included).
  std::size_t k_total = 100;
  Measure measure = Measure::kBalentAcq;
  ScoreOptions options;
  std::uint64_t seed = 0;
  std::size_t workers = 0;
};

/// Throws ConfigError for K = 0 or K > K_total.
void validate(const LoopConfig& config);

/// Seed used to score iteration `iteration` of a loop seeded with `seed`.
std::uint64_t iteration_seed(std::uint64_t seed, std::size_t iteration);

/// Top-k unlabeled indices by descending score, ties to the lower index.
/// `scores` is indexed by pool index (length n_total); labeled entries are
/// ignored. Throws BudgetError when k exceeds the unlabeled count and
/// DataError on a NaN score of an unlabeled point.
std::vector<std::size_t> select_topk(std::span<const double> scores, const PoolState& state,
                                     std::size_t k);

struct StepResult {
  std::vector<std::size_t> selected;
  std::vector<double> scores;  // pool-indexed, NaN for labeled points
  bool terminal = false;       // budget already reached; nothing selected
};

/// One round of the loop. Row i of `samples` holds the draws of
/// state.unlabeled()[i]. Scores are keyed by pool index, so randomized
/// measures do not depend on the row order.
StepResult loop_step(PoolState& state, const SampleTensor& samples, const LoopConfig& config);

}  // namespace beaq
