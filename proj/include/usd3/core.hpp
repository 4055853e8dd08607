#pragma once

// Categorical-distribution primitives shared by every other component:
// probability vectors, one-hot categories, a counter-based deterministic RNG,
// and inverse-CDF categorical sampling.

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace usd3 {

// Raised for numerical failures (non-finite losses, verification deviations
// beyond tolerance) as opposed to plain validation errors; the CLI maps it to
// exit code 2.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Length-K vector of doubles. Probability vectors sum to 1 within 1e-10 and
// may carry entries down to -1e-12 from closed-form arithmetic before clamping.
using Vec = std::vector<double>;

// One category per element, values in {0..K-1}.
using Sequence = std::vector<int>;

struct OneHot {
  int index = 0;
  int K = 0;
  Vec dense() const;
};

// Deterministic counter-based generator (splitmix64). State is exactly
// (seed, draw counter), so identical seed + identical call sequence gives
// bit-identical streams on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64();
  // Uniform double in [0, 1), 53 mantissa bits.
  double uniform();
  // Uniform integer in {0..n-1}, n >= 1.
  int uniform_int(int n);

  // Child generator for an independent stream; child seed is a hash of
  // (parent seed, stream id) so fan-out order never matters.
  Rng child(std::uint64_t stream_id) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t position() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

double inner(const Vec& a, const Vec& b);
int kronecker_delta(const OneHot& x, const OneHot& y);

// Entries in [-1e-12, 0) are floored to 0, then the vector is renormalized.
// Closed-form mixture arithmetic can leave -1e-16-scale negatives where the
// true value is a convex combination; anything below -1e-12 is a real bug
// and throws.
void clamp_and_normalize(Vec& p);

bool is_prob_vector(const Vec& p, double sum_tol = 1e-10, double neg_tol = -1e-12);

// Inverse-CDF draw over ascending category order: returns the first k whose
// cumulative mass strictly exceeds the uniform draw. Rejects p whose sum
// deviates from 1 by more than 1e-8.
int sample_categorical(const Vec& p, Rng& rng);

}  // namespace usd3
