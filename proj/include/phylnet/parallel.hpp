#pragma once

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace phylnet {

// Caps the number of OpenMP threads used by the parallel kernels.
// n <= 0 leaves the runtime default untouched.
inline void set_max_threads(int n) {
#if defined(_OPENMP)
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

inline int max_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace phylnet
