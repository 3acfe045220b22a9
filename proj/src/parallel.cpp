#include "zimp/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace zimp {

namespace {
int g_max_threads = 0;  // 0 = hardware default
}

void set_max_threads(int n) { g_max_threads = n < 0 ? 0 : n; }

int max_threads() {
#ifdef _OPENMP
  return g_max_threads > 0 ? g_max_threads : omp_get_max_threads();
#else
  return 1;
#endif
}

namespace detail {

void run_chunks_impl(std::int64_t n_chunks, ExecMode mode,
                     void (*body)(void*, std::int64_t), void* ctx) {
#ifdef _OPENMP
  if (mode == ExecMode::parallel && max_threads() > 1 && n_chunks > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(max_threads())
    for (std::int64_t c = 0; c < n_chunks; ++c) body(ctx, c);
    return;
  }
#else
  (void)mode;
#endif
  for (std::int64_t c = 0; c < n_chunks; ++c) body(ctx, c);
}

}  // namespace detail

}  // namespace zimp
