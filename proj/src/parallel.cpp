#include "nlprecode/parallel.hpp"
#include <exception>

#include <algorithm>
#include <atomic>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nlprecode::par {

namespace {

int env_threads() {
  const char* s = std::getenv("NLPRECODE_THREADS");
  if (!s) return 0;
  int v = std::atoi(s);
  return v > 0 ? v : 0;
}

std::atomic<int> g_cap{0};

}  // namespace

int max_threads() {
  int cap = g_cap.load(std::memory_order_relaxed);
  if (cap == 0) {
    cap = env_threads();
#ifdef _OPENMP
    if (cap == 0) cap = omp_get_max_threads();
    cap = std::min(cap, omp_get_max_threads());
#else
    if (cap == 0) cap = 1;
#endif
    cap = std::max(cap, 1);
    g_cap.store(cap, std::memory_order_relaxed);
  }
  return cap;
}

void set_max_threads(int n) { g_cap.store(std::max(n, 1), std::memory_order_relaxed); }

void parallel_for(Exec exec, std::int64_t n, const std::function<void(std::int64_t)>& fn) {
#ifdef _OPENMP
  if (exec == Exec::openmp && max_threads() > 1 && n > 1) {
    // Exceptions may not unwind out of the parallel region; stash the first
    // one and rethrow it on the calling thread.
    std::exception_ptr error;
#pragma omp parallel for schedule(static) num_threads(max_threads())
    for (std::int64_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
#pragma omp critical(nlprecode_parallel_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
    return;
  }
#else
  (void)exec;
#endif
  for (std::int64_t i = 0; i < n; ++i) fn(i);
}

}  // namespace nlprecode::par
