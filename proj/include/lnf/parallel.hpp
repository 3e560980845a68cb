#pragma once

#include <cstdint>
#include <functional>

namespace lnf {

// Worker cap: NODF_THREADS env var, defaulting to the machine's core count.
int worker_count();

// Runs fn(i) for i in [0, n). Work is split into contiguous blocks, one per
// worker; results must be written to disjoint slots so that the outcome is
// independent of scheduling. Falls back to a plain loop when n is small or
// one worker is configured.
void parallel_for(int64_t n, const std::function<void(int64_t)>& fn);

}  // namespace lnf
