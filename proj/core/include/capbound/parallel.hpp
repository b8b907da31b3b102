#pragma once

#include <cstdint>
#include <functional>

namespace capbound {

// Worker budget: hardware concurrency capped by the CAPBOUND_THREADS
// environment variable (values < 1 mean single-threaded).
int max_threads();

// Runs chunk_fn(begin, end) over a partition of [0, n) on up to `threads`
// workers (0 = max_threads()). Chunks are contiguous and deterministic, so
// order-independent reductions give identical results for any worker count.
void parallel_for(std::int64_t n,
                  const std::function<void(std::int64_t, std::int64_t)>& chunk_fn,
                  int threads = 0);

}  // namespace capbound
