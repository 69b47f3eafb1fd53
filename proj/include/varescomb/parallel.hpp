#pragma once

#include <cstddef>
#include <functional>

namespace varescomb {

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index is
/// processed exactly once; callers write results into per-index slots so the
/// output does not depend on the thread count. The first exception thrown by
/// any task is rethrown after all workers finish.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

/// Worker count used when callers pass 0.
unsigned default_threads();
void set_default_threads(unsigned threads);

}  // namespace varescomb
