#include "usd3/datagen.hpp"

#include <stdexcept>

namespace usd3 {

namespace {

void check_dims(int K, int D, int count) {
  if (K < 2) throw std::invalid_argument("datagen: K >= 2 required");
  if (D < 1) throw std::invalid_argument("datagen: D >= 1 required");
  if (count < 0) throw std::invalid_argument("datagen: count >= 0 required");
}

Vec random_dist(int K, Rng& rng) {
  Vec v(static_cast<std::size_t>(K));
  double sum = 0.0;
  for (double& x : v) {
    x = 0.1 + rng.uniform();
    sum += x;
  }
  for (double& x : v) x /= sum;
  return v;
}

}  // namespace

std::vector<Vec> markov1_transition(int K, std::uint64_t seed) {
  Rng rng = Rng(seed).child(1);
  std::vector<Vec> rows(static_cast<std::size_t>(K));
  for (Vec& row : rows) row = random_dist(K, rng);
  return rows;
}

Vec markov1_initial(int K, std::uint64_t seed) {
  Rng rng = Rng(seed).child(2);
  return random_dist(K, rng);
}

std::vector<Sequence> make_markov1(int K, int D, int count, std::uint64_t seed) {
  check_dims(K, D, count);
  const std::vector<Vec> trans = markov1_transition(K, seed);
  const Vec init = markov1_initial(K, seed);
  Rng rng = Rng(seed).child(3);
  std::vector<Sequence> out(static_cast<std::size_t>(count), Sequence(static_cast<std::size_t>(D)));
  for (Sequence& s : out) {
    s[0] = sample_categorical(init, rng);
    for (int d = 1; d < D; ++d)
      s[static_cast<std::size_t>(d)] =
          sample_categorical(trans[static_cast<std::size_t>(s[static_cast<std::size_t>(d - 1)])], rng);
  }
  return out;
}

Vec iid_marginal(int K, std::uint64_t seed) {
  Rng rng = Rng(seed).child(4);
  return random_dist(K, rng);
}

std::vector<Sequence> make_iid(int K, int D, int count, std::uint64_t seed) {
  check_dims(K, D, count);
  const Vec marginal = iid_marginal(K, seed);
  Rng rng = Rng(seed).child(5);
  std::vector<Sequence> out(static_cast<std::size_t>(count), Sequence(static_cast<std::size_t>(D)));
  for (Sequence& s : out)
    for (int d = 0; d < D; ++d) s[static_cast<std::size_t>(d)] = sample_categorical(marginal, rng);
  return out;
}

std::pair<Sequence, Sequence> two_mode_templates(int K, int D, std::uint64_t seed) {
  Rng rng = Rng(seed).child(6);
  Sequence a(static_cast<std::size_t>(D)), b(static_cast<std::size_t>(D));
  for (int d = 0; d < D; ++d) {
    a[static_cast<std::size_t>(d)] = rng.uniform_int(K);
    // Force the templates apart at every position so the modes are distinct.
    const int shift = 1 + rng.uniform_int(K - 1);
    b[static_cast<std::size_t>(d)] = (a[static_cast<std::size_t>(d)] + shift) % K;
  }
  return {a, b};
}

std::vector<Sequence> make_two_mode(int K, int D, int count, std::uint64_t seed, double noise) {
  check_dims(K, D, count);
  if (noise < 0.0 || noise > 1.0) throw std::invalid_argument("datagen: noise in [0,1]");
  const auto [a, b] = two_mode_templates(K, D, seed);
  Rng rng = Rng(seed).child(7);
  std::vector<Sequence> out(static_cast<std::size_t>(count));
  for (Sequence& s : out) {
    s = rng.uniform() < 0.5 ? a : b;
    for (int d = 0; d < D; ++d) {
      if (rng.uniform() < noise) {
        const int off = 1 + rng.uniform_int(K - 1);
        s[static_cast<std::size_t>(d)] = (s[static_cast<std::size_t>(d)] + off) % K;
      }
    }
  }
  return out;
}

}  // namespace usd3
