#pragma once

#include <cstdint>
#include <cstdlib>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nndm {

namespace detail {
inline int& thread_count_ref() {
  static int count = 0;  // 0 = not yet resolved
  return count;
}
}  // namespace detail

inline int hardware_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Worker count: explicit set_thread_count() wins, then NNDM_THREADS,
// then whatever the runtime offers.
inline int thread_count() {
  int& count = detail::thread_count_ref();
  if (count > 0) return count;
  if (const char* env = std::getenv("NNDM_THREADS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return count = parsed;
  }
  return count = hardware_threads();
}

inline void set_thread_count(int count) {
  if (count > 0) detail::thread_count_ref() = count;
}

// Runs body(i) for i in [0, n). Each index must touch only its own output
// slots; with that contract results are identical for any thread count.
// The first exception thrown by any index is rethrown on the calling thread.
template <class F>
void parallel_for(std::int64_t n, F&& body) {
#ifdef _OPENMP
  const int threads = thread_count();
  if (threads > 1 && n > 1) {
    std::exception_ptr error = nullptr;
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (std::int64_t i = 0; i < n; ++i) {
      try {
        body(i);
      } catch (...) {
#pragma omp critical(nndm_parallel_for_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
    return;
  }
#endif
  for (std::int64_t i = 0; i < n; ++i) body(i);
}

}  // namespace nndm
