#pragma once

#include <cstddef>
#include <functional>

namespace subtask_forge {

/// Worker count: SUBTASK_FORGE_THREADS when set to a positive integer,
/// otherwise the hardware concurrency (at least 1).
std::size_t thread_count();

/// Runs body(i) for i in [0, n) on up to thread_count() threads. Bodies must
/// only write to slots owned by their index. If several bodies throw, the
/// exception of the lowest index is rethrown, so failures are
/// schedule-independent.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace subtask_forge
