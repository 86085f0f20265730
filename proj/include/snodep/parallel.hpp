#pragma once

#include <cstddef>
#include <functional>

namespace snodep {

/// Worker cap: SNODEP_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t thread_limit();

/// Runs fn(0..n-1) on up to thread_limit() threads. Each index must own its
/// outputs. If any call throws, the exception of the lowest failing index is
/// rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace snodep
