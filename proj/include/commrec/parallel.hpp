#pragma once

#include <cstdint>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace commrec {

/// Execution mode for the data-parallel kernels. Serial is the reference
/// path; OpenMP must produce bit-identical results (each index writes only
/// its own slot, reductions happen after the loop in index order).
enum class ExecMode { Serial, OpenMP };

inline int max_workers() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_workers(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

/// Runs fn(i) for i in [0, n). Iterations must be independent. Exceptions
/// thrown by fn are captured and the first one (lowest index) is rethrown
/// after the loop, so OpenMP regions never terminate the process.
template <typename Fn>
void parallel_for(std::int64_t n, ExecMode mode, Fn&& fn) {
#ifdef _OPENMP
  if (mode == ExecMode::OpenMP && n > 1) {
    std::exception_ptr first_error;
    std::int64_t first_error_index = -1;
    std::mutex error_mutex;
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (first_error_index < 0 || i < first_error_index) {
          first_error = std::current_exception();
          first_error_index = i;
        }
      }
    }
    if (first_error) std::rethrow_exception(first_error);
    return;
  }
#else
  (void)mode;
#endif
  for (std::int64_t i = 0; i < n; ++i) fn(i);
}

}  // namespace commrec
