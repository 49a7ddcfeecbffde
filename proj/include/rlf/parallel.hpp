#pragma once

#include <cstddef>
#include <functional>

namespace rlf {

/// Worker count: hardware concurrency, capped by RLF_LAB_THREADS when set.
unsigned worker_count();

/// Runs body(begin, end) over a static partition of [0, n). The partition
/// depends only on n and the worker count, and callers reduce per-index
/// results serially, so results never depend on scheduling. The exception
/// from the lowest-numbered chunk is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace rlf
