#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace usd3 {

// Thread budget: USD3_THREADS if set (>=1), else hardware_concurrency, min 1.
int thread_budget();

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks, one per
// worker. fn must only touch per-index state; no ordering guarantees.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  int max_threads = 0);

// Sums per-item double buffers into out using a fixed pairwise tree over item
// indices. The summation order depends only on n, never on thread count or
// completion order, so results are bit-identical across thread budgets.
// items[i] may be empty (treated as zero).
void pairwise_reduce(std::vector<std::vector<double>>& items,
                     std::vector<double>& out);

// Same pairwise tree over scalars.
double pairwise_sum(std::vector<double> items);

}  // namespace usd3
