#pragma once

#include <cstddef>
#include <functional>

namespace popagg {

// requested > 0 wins; otherwise POPAGG_THREADS, otherwise 1.
int resolve_threads(int requested);

// Runs body(i, worker) for i in [0, n) on `threads` workers with contiguous static chunks.
// Exceptions from workers are rethrown (the first by index order).
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t index, int worker)>& body);

}  // namespace popagg
