#include <cmath>
#include <stdexcept>
#include <set>
#include <vector>

#include "doctest.h"
#include "usd3/core.hpp"

using namespace usd3;

TEST_CASE("rng streams are reproducible and counter-based") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(a.position() == 100);

  // Child derivation depends only on (seed, stream id), not on how far the
  // parent has advanced.
  Rng parent(7);
  Rng child_before = parent.child(3);
  parent.uniform();
  parent.uniform();
  Rng child_after = parent.child(3);
  CHECK(child_before.next_u64() == child_after.next_u64());

  // Distinct stream ids give distinct streams.
  CHECK(parent.child(1).next_u64() != parent.child(2).next_u64());
  // Child streams differ from the parent stream.
  CHECK(Rng(7).next_u64() != Rng(7).child(0).next_u64());
}

TEST_CASE("rng uniform ranges") {
  Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  std::set<int> seen;
  for (int i = 0; i < 1000; ++i) {
    const int v = rng.uniform_int(5);
    CHECK(v >= 0);
    CHECK(v < 5);
    seen.insert(v);
  }
  CHECK(seen.size() == 5);
  CHECK(rng.uniform_int(1) == 0);
  CHECK_THROWS_AS(rng.uniform_int(0), std::invalid_argument);
}

TEST_CASE("categorical sampling follows the distribution") {
  Rng rng(5);
  const Vec p{0.2, 0.3, 0.5};
  std::vector<int> counts(3, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(sample_categorical(p, rng))];
  for (int k = 0; k < 3; ++k)
    CHECK(std::abs(counts[static_cast<std::size_t>(k)] / static_cast<double>(n) - p[static_cast<std::size_t>(k)]) < 0.01);
}

TEST_CASE("categorical sampling edge cases") {
  Rng rng(1);
  for (int i = 0; i < 50; ++i) CHECK(sample_categorical({0.0, 1.0, 0.0}, rng) == 1);
  CHECK_THROWS(sample_categorical({0.3, 0.3}, rng));  // sums to 0.6
}

TEST_CASE("clamp_and_normalize floors arithmetic dust and rejects real negatives") {
  Vec p{0.5, -1e-15, 0.5};
  clamp_and_normalize(p);
  CHECK(p[1] == 0.0);
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0).epsilon(1e-15));

  Vec bad{0.6, -1e-6, 0.4};
  CHECK_THROWS(clamp_and_normalize(bad));
}

TEST_CASE("is_prob_vector") {
  CHECK(is_prob_vector({0.25, 0.75}));
  CHECK(is_prob_vector({1.0, -1e-13, 0.0}));
  CHECK_FALSE(is_prob_vector({0.5, 0.4}));
  CHECK_FALSE(is_prob_vector({1.1, -0.1}));
}

TEST_CASE("one-hot, inner product, kronecker delta") {
  OneHot x{2, 4};
  const Vec d = x.dense();
  CHECK(d == Vec{0.0, 0.0, 1.0, 0.0});
  CHECK(inner(d, Vec{1.0, 2.0, 3.0, 4.0}) == 3.0);
  CHECK(kronecker_delta(OneHot{1, 3}, OneHot{1, 3}) == 1);
  CHECK(kronecker_delta(OneHot{1, 3}, OneHot{2, 3}) == 0);
}
