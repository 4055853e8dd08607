#include "usd3/threading.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>

namespace usd3 {

int thread_budget() {
  if (const char* env = std::getenv("USD3_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (...) {
      // fall through to hardware default
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  int max_threads) {
  if (n == 0) return;
  int budget = max_threads > 0 ? max_threads : thread_budget();
  budget = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(budget), n));
  if (budget <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(budget));
  std::exception_ptr first_error = nullptr;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(budget), nullptr);
  const std::size_t chunk = (n + static_cast<std::size_t>(budget) - 1) / static_cast<std::size_t>(budget);
  for (int w = 0; w < budget; ++w) {
    const std::size_t lo = static_cast<std::size_t>(w) * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    workers.emplace_back([&fn, &errors, w, lo, hi]() {
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors)
    if (e && !first_error) first_error = e;
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

// Accumulates items[lo, hi) by splitting at the midpoint; leaf order is the
// index order, so the float rounding pattern is a function of n alone.
void reduce_range(std::vector<std::vector<double>>& items, std::size_t lo, std::size_t hi,
                  std::vector<double>& out) {
  if (hi - lo == 1) {
    if (!items[lo].empty()) {
      if (items[lo].size() != out.size()) throw std::invalid_argument("pairwise_reduce: size mismatch");
      for (std::size_t k = 0; k < out.size(); ++k) out[k] += items[lo][k];
    }
    return;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  std::vector<double> right(out.size(), 0.0);
  reduce_range(items, lo, mid, out);
  reduce_range(items, mid, hi, right);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += right[k];
}

double sum_range(const std::vector<double>& items, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return items[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return sum_range(items, lo, mid) + sum_range(items, mid, hi);
}

}  // namespace

void pairwise_reduce(std::vector<std::vector<double>>& items, std::vector<double>& out) {
  std::fill(out.begin(), out.end(), 0.0);
  if (items.empty()) return;
  reduce_range(items, 0, items.size(), out);
}

double pairwise_sum(std::vector<double> items) {
  if (items.empty()) return 0.0;
  return sum_range(items, 0, items.size());
}

}  // namespace usd3
