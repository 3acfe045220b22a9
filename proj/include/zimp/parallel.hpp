#pragma once

#include <cstdint>
#include <utility>

namespace zimp {

enum class ExecMode { serial, parallel };

// Worker count used by parallel kernels. 0 restores the hardware default.
void set_max_threads(int n);
int max_threads();

// Fixed chunk grid. Kernels that draw randomness seed one stream per chunk
// and combine partial results in chunk order, so the output is identical
// for serial and parallel execution and for any worker count.
struct ChunkGrid {
  std::int64_t total = 0;
  std::int64_t chunk = 1;

  std::int64_t chunks() const {
    return total == 0 ? 0 : (total + chunk - 1) / chunk;
  }
  std::int64_t begin(std::int64_t c) const { return c * chunk; }
  std::int64_t end(std::int64_t c) const {
    std::int64_t e = (c + 1) * chunk;
    return e < total ? e : total;
  }
};

namespace detail {
void run_chunks_impl(std::int64_t n_chunks, ExecMode mode,
                     void (*body)(void*, std::int64_t), void* ctx);
}

// fn(chunk_index, row_begin, row_end)
template <class Fn>
void run_chunks(const ChunkGrid& grid, ExecMode mode, Fn&& fn) {
  struct Ctx {
    const ChunkGrid* grid;
    Fn* fn;
  } ctx{&grid, &fn};
  detail::run_chunks_impl(
      grid.chunks(), mode,
      [](void* p, std::int64_t c) {
        auto* s = static_cast<Ctx*>(p);
        (*s->fn)(c, s->grid->begin(c), s->grid->end(c));
      },
      &ctx);
}

}  // namespace zimp
