#pragma once
// Fixed-block work partitioning. Items [0, n) are split into n_blocks
// contiguous blocks whose boundaries do not depend on the thread count;
// each block runs serially in index order and blocks are merged in block
// order by the caller. The OpenMP path and the serial reference therefore
// produce bit-identical results, which test_parallel_consistency asserts.

#include <cstddef>
#include <functional>

namespace cltlab {

using BlockFn = std::function<void(int block, std::size_t begin, std::size_t end)>;

inline std::size_t block_begin(std::size_t n, int n_blocks, int b) {
  return n * static_cast<std::size_t>(b) / static_cast<std::size_t>(n_blocks);
}

void run_blocks_serial(std::size_t n_items, int n_blocks, const BlockFn& fn);
void run_blocks_omp(std::size_t n_items, int n_blocks, int threads, const BlockFn& fn);

// threads <= 1 selects the serial reference path.
void run_blocks(std::size_t n_items, int n_blocks, int threads, const BlockFn& fn);

int hardware_threads();

}  // namespace cltlab
