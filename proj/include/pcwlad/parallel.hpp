#pragma once

#include <functional>

namespace pcwlad {

/// Worker count: hardware concurrency capped by the PCWLAD_THREADS
/// environment variable (a value of 1 forces serial execution).
int worker_count();

/// Run fn(i) for i in [begin, end) on a bounded pool. Work items must be
/// independent; callers keep determinism by writing to per-index slots.
/// threads == 0 uses worker_count().
void parallel_for(int begin, int end, const std::function<void(int)>& fn, int threads = 0);

} // namespace pcwlad
