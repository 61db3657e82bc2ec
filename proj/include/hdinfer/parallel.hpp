#pragma once

#include <cstddef>
#include <functional>

namespace hdinfer {

/// Caps worker parallelism process-wide; 0 restores the hardware default.
void set_max_threads(int threads);
int max_threads();

// Runs fn(i) for i in [begin, end) on up to max_threads() workers. Work is
// split into contiguous static chunks, so any output written to slot i is
// identical no matter how many threads run. fn must not throw across tasks
// it does not own; exceptions are captured and the first one is rethrown.
void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& fn);

}  // namespace hdinfer
