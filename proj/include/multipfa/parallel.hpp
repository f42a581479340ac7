#pragma once

#include <cstddef>
#include <functional>

namespace multipfa {

/// Worker count: `requested` when nonzero, else the MULTIPFA_THREADS
/// environment variable, else std::thread::hardware_concurrency().
unsigned resolve_threads(unsigned requested = 0);

/// Calls body(i) for every i in [0, count) on up to `threads` workers.
/// Each index runs exactly once; callers write results into slot i, which
/// keeps output order independent of scheduling. The first exception thrown
/// by a body is rethrown after all workers stop.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace multipfa
