#pragma once

// Synthetic dataset generators: an order-1 Markov chain, iid categories, and
// a noisy two-template mixture. Each generator's underlying distribution is
// exposed so tests can compare empirical counts against it.

#include <cstdint>
#include <utility>
#include <vector>

#include "usd3/core.hpp"

namespace usd3 {

// Row-stochastic transition matrix and initial distribution, both fixed
// functions of the seed.
std::vector<Vec> markov1_transition(int K, std::uint64_t seed);
Vec markov1_initial(int K, std::uint64_t seed);
std::vector<Sequence> make_markov1(int K, int D, int count, std::uint64_t seed);

Vec iid_marginal(int K, std::uint64_t seed);
std::vector<Sequence> make_iid(int K, int D, int count, std::uint64_t seed);

// Two deterministic templates; each sample copies one and resamples each
// element with probability noise (uniform over the other K-1 categories).
std::pair<Sequence, Sequence> two_mode_templates(int K, int D, std::uint64_t seed);
std::vector<Sequence> make_two_mode(int K, int D, int count, std::uint64_t seed,
                                    double noise = 0.05);

}  // namespace usd3
