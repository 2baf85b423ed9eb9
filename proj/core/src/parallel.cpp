#include "cdcnn/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cdcnn {

namespace {

int resolve_default() {
  if (const char* env = std::getenv(kThreadsEnvVar)) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

int& configured() {
  static int n = resolve_default();
  return n;
}

}  // namespace

int thread_count() { return configured(); }

void set_thread_count(int n) { configured() = n > 0 ? n : 1; }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const int threads = thread_count();
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(threads)
  for (long long i = 0; i < static_cast<long long>(n); ++i) body(static_cast<std::size_t>(i));
#else
  for (std::size_t i = 0; i < n; ++i) body(i);
#endif
}

}  // namespace cdcnn
