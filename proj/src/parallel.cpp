#include "cltlab/parallel.hpp"

#include <algorithm>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cltlab {

void run_blocks_serial(std::size_t n_items, int n_blocks, const BlockFn& fn) {
  for (int b = 0; b < n_blocks; ++b) {
    const std::size_t lo = block_begin(n_items, n_blocks, b);
    const std::size_t hi = block_begin(n_items, n_blocks, b + 1);
    if (lo < hi) fn(b, lo, hi);
  }
}

void run_blocks_omp(std::size_t n_items, int n_blocks, int threads, const BlockFn& fn) {
#ifdef _OPENMP
#pragma omp parallel for num_threads(threads) schedule(dynamic, 1)
  for (int b = 0; b < n_blocks; ++b) {
    const std::size_t lo = block_begin(n_items, n_blocks, b);
    const std::size_t hi = block_begin(n_items, n_blocks, b + 1);
    if (lo < hi) fn(b, lo, hi);
  }
#else
  (void)threads;
  run_blocks_serial(n_items, n_blocks, fn);
#endif
}

void run_blocks(std::size_t n_items, int n_blocks, int threads, const BlockFn& fn) {
  if (threads <= 1) {
    run_blocks_serial(n_items, n_blocks, fn);
  } else {
    run_blocks_omp(n_items, n_blocks, threads, fn);
  }
}

int hardware_threads() {
#ifdef _OPENMP
  return std::max(1, omp_get_max_threads());
#else
  return std::max(1u, std::thread::hardware_concurrency());
#endif
}

}  // namespace cltlab
