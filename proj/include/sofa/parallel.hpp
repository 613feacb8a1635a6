#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sofa {

// Thread count for the OpenMP kernels. 0 = library default.
void set_threads(int n);
int max_threads();

// Runs body(i) for i in [0, n). Every iteration must write only to its own
// slot, so the result is identical for any schedule or thread count. Serial
// fallback when OpenMP is off or n is tiny.
template <typename F>
void parallel_for(std::size_t n, F&& body) {
#ifdef _OPENMP
  if (n > 1 && max_threads() > 1) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      body(static_cast<std::size_t>(i));
    }
    return;
  }
#endif
  for (std::size_t i = 0; i < n; ++i) body(i);
}

// Serial twin of parallel_for, kept as the reference path for tests and the
// benchmark harness.
template <typename F>
void serial_for(std::size_t n, F&& body) {
  for (std::size_t i = 0; i < n; ++i) body(i);
}

}  // namespace sofa
