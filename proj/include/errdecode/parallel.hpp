#pragma once

#include <cstddef>
#include <functional>

namespace errdecode {

/// Worker cap: ERRDECODE_THREADS when set and positive, otherwise the
/// hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs task(i) for i in [0, n_tasks) on up to worker_count() threads.
/// Tasks must write only to their own slot; results are then independent of
/// scheduling. The first exception thrown by any task is rethrown.
void parallel_for(std::size_t n_tasks, const std::function<void(std::size_t)>& task);

}  // namespace errdecode
