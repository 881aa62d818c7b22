#pragma once

#include <cstddef>
#include <functional>

namespace karma {

/// Worker count from KARMA_ALLOC_THREADS (0 or unset means hardware concurrency).
unsigned workerCount();

/// Runs body(k) for k in [0, count) over contiguous chunks. Callers must only
/// write to per-index state; results then do not depend on the thread count.
void parallelFor(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace karma
