#include "beaq/active_loop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "beaq/error.hpp"
#include "beaq/random.hpp"

namespace beaq {

PoolState::PoolState(std::size_t n_total, std::span<const std::size_t> initial_labeled)
    : n_total_(n_total), initial_(initial_labeled.begin(), initial_labeled.end()) {
  std::sort(initial_.begin(), initial_.end());
  if (std::adjacent_find(initial_.begin(), initial_.end()) != initial_.end()) {
    throw DomainError("pool state: repeated initial index");
  }
  if (!initial_.empty() && initial_.back() >= n_total) {
    throw DomainError("pool state: initial index " + std::to_string(initial_.back()) +
                      " out of range");
  }
  labeled_ = initial_;
  unlabeled_.reserve(n_total - labeled_.size());
  std::size_t j = 0;
  for (std::size_t i = 0; i < n_total; ++i) {
    if (j < labeled_.size() && labeled_[j] == i) {
      ++j;
    } else {
      unlabeled_.push_back(i);
    }
  }
}

PoolState PoolState::restore(std::size_t n_total, std::span<const std::size_t> initial_labeled,
                             std::vector<HistoryEntry> history) {
  PoolState state(n_total, initial_labeled);
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (history[i].iteration != i) throw DomainError("pool state: history out of order");
    state.commit(std::move(history[i]));
  }
  return state;
}

bool PoolState::is_labeled(std::size_t index) const {
  return std::binary_search(labeled_.begin(), labeled_.end(), index);
}

void PoolState::commit(HistoryEntry entry) {
  std::vector<std::size_t> picked = entry.selected;
  std::sort(picked.begin(), picked.end());
  if (std::adjacent_find(picked.begin(), picked.end()) != picked.end()) {
    throw DomainError("pool state: index selected twice");
  }
  for (std::size_t idx : picked) {
    if (idx >= n_total_) throw DomainError("pool state: index " + std::to_string(idx) + " out of range");
    if (is_labeled(idx)) throw DomainError("pool state: index " + std::to_string(idx) + " already labeled");
  }
  std::vector<std::size_t> merged;
  merged.reserve(labeled_.size() + picked.size());
  std::merge(labeled_.begin(), labeled_.end(), picked.begin(), picked.end(), std::back_inserter(merged));
  labeled_ = std::move(merged);
  std::vector<std::size_t> rest;
  rest.reserve(unlabeled_.size() - picked.size());
  std::set_difference(unlabeled_.begin(), unlabeled_.end(), picked.begin(), picked.end(),
                      std::back_inserter(rest));
  unlabeled_ = std::move(rest);
  history_.push_back(std::move(entry));
}

void validate(const LoopConfig& config) {
  if (config.k_per_iter == 0) throw ConfigError("k_per_iter must be positive");
  if (config.k_per_iter > config.k_total) throw ConfigError("k_per_iter exceeds k_total");
}

std::uint64_t iteration_seed(std::uint64_t seed, std::size_t iteration) {
  return stream_id({seed, iteration, tag(StreamTag::kLoop)});
}

std::vector<std::size_t> select_topk(std::span<const double> scores, const PoolState& state,
                                     std::size_t k) {
  if (scores.size() != state.n_total()) {
    throw DomainError("select_topk: " + std::to_string(scores.size()) + " scores for a pool of " +
                      std::to_string(state.n_total()));
  }
  const auto& candidates = state.unlabeled();
  if (k > candidates.size()) {
    throw BudgetError("select_topk: k = " + std::to_string(k) + " but only " +
                      std::to_string(candidates.size()) + " unlabeled points");
  }
  for (std::size_t idx : candidates) {
    if (std::isnan(scores[idx])) throw DataError("select_topk: NaN score at index " + std::to_string(idx));
  }
  std::vector<std::size_t> order(candidates.begin(), candidates.end());
  auto before = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), before);
  order.resize(k);
  return order;
}

StepResult loop_step(PoolState& state, const SampleTensor& samples, const LoopConfig& config) {
  validate(config);
  StepResult result;
  const std::size_t n_labeled = state.labeled().size();
  if (n_labeled >= config.k_total) {
    result.terminal = true;
    return result;
  }
  const auto& unlabeled = state.unlabeled();
  if (samples.n_points() != unlabeled.size()) {
    throw DomainError("loop_step: " + std::to_string(samples.n_points()) +
                      " sample rows for " + std::to_string(unlabeled.size()) + " unlabeled points");
  }
  const std::size_t k = std::min(config.k_per_iter, config.k_total - n_labeled);

  const std::size_t iteration = state.history().size();
  const std::uint64_t seed = iteration_seed(config.seed, iteration);
  std::vector<std::uint64_t> ids(unlabeled.begin(), unlabeled.end());
  const auto local = score_pool(samples, config.measure, config.options, seed, config.workers, ids);

  result.scores.assign(state.n_total(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < unlabeled.size(); ++i) result.scores[unlabeled[i]] = local.score[i];
  result.selected = select_topk(result.scores, state, k);

  HistoryEntry entry{iteration, config.measure, seed, result.selected, {}};
  for (std::size_t idx : result.selected) entry.scores.push_back(result.scores[idx]);
  state.commit(std::move(entry));
  return result;
}

}  // namespace beaq
