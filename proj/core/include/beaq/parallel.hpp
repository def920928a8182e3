#pragma once

#include <cstddef>
#include <functional>

namespace beaq {

/// Worker count from the BEAQ_WORKERS environment variable, falling back to
/// the hardware concurrency. Always >= 1.
std::size_t default_worker_count();

/// Runs body(i) for i in [0, n) on `workers` threads with static contiguous
/// partitioning. Bodies must only write to state owned by index i; results
/// are then independent of the worker count. The first exception thrown by
/// any body is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  std::size_t workers = 0);

}  // namespace beaq
