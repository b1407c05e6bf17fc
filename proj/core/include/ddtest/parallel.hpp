#pragma once

#include <cstddef>
#include <functional>

namespace ddtest {

/// Process-wide cap on worker threads (0 = hardware concurrency).
void set_max_threads(int threads);
int max_threads();

/// Runs fn(i) for i in [0, count) on up to max_threads() workers. Work is
/// split by index, so results written to per-index slots are deterministic
/// regardless of the thread count. Exceptions propagate to the caller.
/// Nested calls run inline on the calling worker.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace ddtest
