#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef SEQTRAJ_HAVE_OPENMP
#include <omp.h>
#endif

namespace seqtraj {

// Process-wide worker count for the OpenMP kernels. 1 means every kernel
// runs its loop on the calling thread.
void set_num_threads(int n);
int num_threads();

// Thread count from SEQTRAJ_THREADS, or `fallback` when unset or invalid.
int threads_from_env(int fallback);

// Runs fn(i) for i in [0, n). Each iteration must write only to its own
// output slot; reductions belong to the caller, in index order, so results
// do not depend on the thread count. The first exception thrown by any
// iteration is rethrown after the loop.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const int threads = num_threads();
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
#ifdef SEQTRAJ_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
#endif
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace seqtraj
