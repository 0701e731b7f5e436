#pragma once

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pcm {

// Map-style parallel loop. Every iteration writes to its own slots and there
// are no cross-iteration reductions, so the result is identical for any thread
// count; floating-point reductions stay sequential elsewhere.
template <class F>
void par_for(std::int64_t n, F&& body, bool parallel = true) {
#ifdef _OPENMP
  if (parallel && n > 1) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
#endif
  (void)parallel;
  for (std::int64_t i = 0; i < n; ++i) body(i);
}

inline int par_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace pcm
