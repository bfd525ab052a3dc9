#pragma once

#include <functional>

namespace tlsmap {

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Work items must be
// independent and write to disjoint slots; the partition is deterministic,
// so results never depend on the thread count.
void parallel_for(long n, int jobs, const std::function<void(long)>& fn);

}  // namespace tlsmap
