#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "usd3/threading.hpp"

using namespace usd3;

TEST_CASE("pairwise sum follows the fixed midpoint tree") {
  CHECK(pairwise_sum({}) == 0.0);
  CHECK(pairwise_sum({3.5}) == 3.5);
  // n=4 splits as (a+b) + (c+d), bit-exactly.
  const double a = 0.1, b = 0.2, c = 0.3, d = 0.4;
  CHECK(pairwise_sum({a, b, c, d}) == (a + b) + (c + d));
  // n=3 splits at the midpoint: a + (b+c).
  CHECK(pairwise_sum({a, b, c}) == a + (b + c));
  // The tree differs from left-to-right accumulation in general; the value
  // still matches within rounding.
  std::vector<double> v(1001);
  double linear = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = 1.0 / static_cast<double>(i + 1);
    linear += v[i];
  }
  CHECK(pairwise_sum(v) == doctest::Approx(linear).epsilon(1e-12));
}

TEST_CASE("pairwise reduce treats missing buffers as zero") {
  std::vector<std::vector<double>> items(4);
  items[0] = {1.0, 2.0};
  items[2] = {10.0, 20.0};
  std::vector<double> out(2, -99.0);  // caller sizes the buffer; old values are cleared
  pairwise_reduce(items, out);
  REQUIRE(out.size() == 2);
  CHECK(out[0] == 11.0);
  CHECK(out[1] == 22.0);
}

TEST_CASE("pairwise reduce equals the scalar tree per slot") {
  std::vector<std::vector<double>> items(7);
  std::vector<double> slot0(7);
  for (std::size_t i = 0; i < 7; ++i) {
    items[i] = {0.1 * static_cast<double>(i + 1), static_cast<double>(i)};
    slot0[i] = items[i][0];
  }
  std::vector<double> out(2);
  pairwise_reduce(items, out);
  CHECK(out[0] == pairwise_sum(slot0));
}

TEST_CASE("parallel_for covers every index exactly once") {
  const std::size_t n = 1000;
  std::vector<std::atomic<int>> hits(n);
  for (auto& h : hits) h.store(0);
  for (int threads : {1, 2, 8}) {
    for (auto& h : hits) h.store(0);
    parallel_for(n, [&](std::size_t i) { hits[i].fetch_add(1); }, threads);
    for (auto& h : hits) CHECK(h.load() == 1);
  }
  // Zero work is a no-op.
  parallel_for(0, [&](std::size_t) { throw std::logic_error("must not run"); });
}

TEST_CASE("parallel_for propagates worker exceptions") {
  CHECK_THROWS_AS(
      parallel_for(16, [](std::size_t i) {
        if (i == 7) throw std::runtime_error("boom");
      }, 4),
      std::runtime_error);
}

TEST_CASE("thread budget honors the environment override") {
  setenv("USD3_THREADS", "3", 1);
  CHECK(thread_budget() == 3);
  setenv("USD3_THREADS", "0", 1);
  CHECK(thread_budget() >= 1);
  unsetenv("USD3_THREADS");
  CHECK(thread_budget() >= 1);
}
