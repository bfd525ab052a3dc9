#include "tlsmap/parallel.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tlsmap {

void parallel_for(long n, int jobs, const std::function<void(long)>& fn) {
  if (n <= 0) return;
  int workers = std::max(1, jobs);
  workers = static_cast<int>(std::min<long>(workers, n));
  if (workers == 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }

  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto run_range = [&](long lo, long hi) {
    try {
      for (long i = lo; i < hi; ++i) fn(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(workers);
  long chunk = (n + workers - 1) / workers;
  for (int t = 0; t < workers; ++t) {
    long lo = t * chunk;
    long hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    threads.emplace_back(run_range, lo, hi);
  }
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace tlsmap
