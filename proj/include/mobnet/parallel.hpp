#pragma once

// Replication runners.
//
// replicate() is the OpenMP kernel used by every experiment; replicate_serial()
// is the reference loop it is tested against. Both write result i into slot i,
// so downstream reductions see the same ordered vector whatever the thread
// count.

#include <cstddef>
#include <exception>
#include <mutex>
#include <type_traits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mobnet {

template <class Fn>
auto replicate_serial(std::size_t count, Fn&& fn) {
  using Result = std::invoke_result_t<Fn&, std::size_t>;
  std::vector<Result> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(fn(i));
  return out;
}

// Runs fn(0..count-1) on `threads` OpenMP threads (<= 0: runtime default).
// The first exception thrown by any replication is rethrown on the caller.
template <class Fn>
auto replicate(std::size_t count, int threads, Fn&& fn) {
  using Result = std::invoke_result_t<Fn&, std::size_t>;
  static_assert(std::is_default_constructible_v<Result>);
  std::vector<Result> out(count);
  std::exception_ptr failure;
  std::mutex failure_mutex;
#ifdef _OPENMP
  const int team = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(team)
#endif
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(count); ++i) {
    try {
      out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  (void)threads;
  if (failure) std::rethrow_exception(failure);
  return out;
}

inline int default_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace mobnet
