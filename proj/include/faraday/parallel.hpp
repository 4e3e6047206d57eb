#pragma once

#include <cstdint>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace faraday {

inline int max_threads() {
#if defined(_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}

/// Static-schedule parallel loop. Bodies must write only to slots owned by
/// their own index so results are identical for any worker count.
template <class F>
inline void parallel_for(std::int64_t n, F&& f) {
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t i = 0; i < n; ++i) f(i);
}

/// Serial loop with the same signature; the reference path used by tests and
/// the benchmark.
template <class F>
inline void serial_for(std::int64_t n, F&& f) {
    for (std::int64_t i = 0; i < n; ++i) f(i);
}

} // namespace faraday
