#pragma once

#include <cstddef>
#include <functional>

namespace otom {

// Worker count: min(hardware_concurrency, OTOM_THREADS) when the environment
// variable is set, hardware_concurrency otherwise. requested > 0 overrides.
int effective_workers(int requested = 0);

// Runs fn(begin, end) over [0, n) split into contiguous chunks, one chunk per
// worker. Deterministic partitioning: chunk boundaries depend only on n and
// the worker count, never on timing.
void parallel_chunks(std::size_t n, int workers,
                     const std::function<void(std::size_t, std::size_t, int)>& fn);

}  // namespace otom
