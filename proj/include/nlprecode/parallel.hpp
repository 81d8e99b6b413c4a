#pragma once

#include <cstdint>
#include <functional>

namespace nlprecode::par {

// Execution policy for the data-parallel kernels. Every kernel has a serial
// path that produces bit-identical results to the OpenMP path: work is split
// into fixed chunks with per-chunk derived seeds and partial results are
// reduced in chunk order, independent of the thread count.
enum class Exec { serial, openmp };

// Thread cap: min(NLPRECODE_THREADS, omp_get_max_threads()), at least 1.
int max_threads();
void set_max_threads(int n);

// parallel_for over [0, n). fn must be safe to call concurrently for
// distinct indices.
void parallel_for(Exec exec, std::int64_t n, const std::function<void(std::int64_t)>& fn);

}  // namespace nlprecode::par
