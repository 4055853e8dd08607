#include "usd3/core.hpp"

#include <cmath>
#include <stdexcept>

namespace usd3 {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

Vec OneHot::dense() const {
  Vec e(static_cast<std::size_t>(K), 0.0);
  e.at(static_cast<std::size_t>(index)) = 1.0;
  return e;
}

std::uint64_t Rng::next_u64() {
  ++counter_;
  return mix64(seed_ + counter_ * kGolden);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

int Rng::uniform_int(int n) {
  if (n < 1) throw std::invalid_argument("uniform_int: n < 1");
  // Desk-scale n; modulo bias at n << 2^64 is far below statistical tolerances.
  return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
}

Rng Rng::child(std::uint64_t stream_id) const {
  return Rng(mix64(mix64(seed_ + kGolden) ^ mix64(stream_id + 0x632BE59BD9B4E019ULL)));
}

double inner(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("inner: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

int kronecker_delta(const OneHot& x, const OneHot& y) {
  if (x.K != y.K) throw std::invalid_argument("kronecker_delta: K mismatch");
  return x.index == y.index ? 1 : 0;
}

void clamp_and_normalize(Vec& p) {
  double sum = 0.0;
  for (double& v : p) {
    if (v < 0.0) {
      if (v < -1e-12) throw std::domain_error("clamp_and_normalize: entry below -1e-12");
      v = 0.0;
    }
    sum += v;
  }
  if (sum <= 0.0) throw std::domain_error("clamp_and_normalize: zero mass");
  for (double& v : p) v /= sum;
}

bool is_prob_vector(const Vec& p, double sum_tol, double neg_tol) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= neg_tol)) return false;
    sum += v;
  }
  return std::fabs(sum - 1.0) <= sum_tol;
}

int sample_categorical(const Vec& p, Rng& rng) {
  if (p.empty()) throw std::invalid_argument("sample_categorical: empty vector");
  double sum = 0.0;
  for (double v : p) {
    if (v < -1e-12) throw std::invalid_argument("sample_categorical: negative mass");
    sum += v;
  }
  if (std::fabs(sum - 1.0) > 1e-8) throw std::invalid_argument("sample_categorical: mass not 1");

  const double u = rng.uniform() * sum;  // scale instead of renormalizing entries
  double cum = 0.0;
  int last_positive = -1;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double w = p[k] > 0.0 ? p[k] : 0.0;
    if (w > 0.0) last_positive = static_cast<int>(k);
    cum += w;
    if (cum > u) return static_cast<int>(k);
  }
  // u landed on the last representable edge of the CDF; all remaining mass
  // belongs to the last positive category.
  if (last_positive < 0) throw std::invalid_argument("sample_categorical: zero mass");
  return last_positive;
}

}  // namespace usd3
