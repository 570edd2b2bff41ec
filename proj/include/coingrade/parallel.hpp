#pragma once

#include <chrono>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace coingrade {

// Caps the OpenMP worker count (0 = library default). All parallel loops in
// this codebase assign each output element to exactly one thread and keep
// per-element accumulation order fixed, so results do not depend on the
// worker count.
inline void set_max_jobs(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

inline double wall_time() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

}  // namespace coingrade
