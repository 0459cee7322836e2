#pragma once

#include <functional>

namespace f4d {

/// Worker count for parallel_for. Defaults to F4D_THREADS from the
/// environment, else 1. Values below 1 are treated as 1.
int thread_count();
void set_thread_count(int n);

/// Calls fn(i) for i in [0, n) over contiguous blocks, one block per worker.
/// Results must go to per-index slots so the outcome does not depend on the
/// worker count. The exception of the lowest failing index is rethrown.
/// Calls made from inside a worker run serially.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace f4d
