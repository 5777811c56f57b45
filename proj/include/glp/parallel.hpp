#pragma once

// Indexed work loops with an OpenMP path and a serial reference path.
//
// Work items write only to their own output slot, so both paths produce
// identical results; callers reduce in index order afterwards.

#include <cstddef>
#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace glp {

enum class Execution { serial, parallel };

struct Parallelism {
  Execution mode = Execution::parallel;
  int threads = 0;  // 0: OpenMP default
};

inline int available_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Runs body(i) for i in [0, n). The first exception (by index) is rethrown
// after all items finish.
template <class Body>
void for_each_index(std::size_t n, const Parallelism& par, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
  if (par.mode == Execution::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    const auto count = static_cast<long long>(n);
#ifdef _OPENMP
    const int threads = par.threads > 0 ? par.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
#endif
    for (long long i = 0; i < count; ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace glp
