#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ssacl {

/// Static-schedule parallel loop. Callers must only perform disjoint writes
/// inside `f`; under that contract results are bit-identical run to run for
/// a fixed thread count.
template <class F>
void parallel_for(std::size_t n, F&& f) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    f(static_cast<std::size_t>(i));
  }
#else
  for (std::size_t i = 0; i < n; ++i) f(i);
#endif
}

inline int worker_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace ssacl
