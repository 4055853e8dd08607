#include <cmath>
#include <stdexcept>
#include <map>

#include "doctest.h"
#include "helpers.hpp"
#include "usd3/loss_continuous.hpp"
#include "usd3/model.hpp"
#include "usd3/oracle.hpp"

using namespace usd3;

namespace {

const NoiseSchedule kCont = testutil::unit_rate_schedule();
const double kHalf = testutil::time_for_abar(0.5);

ModelFn random_tabular_fn(int K, int D, double T, std::uint64_t seed) {
  ModelDims dims;
  dims.backend = Backend::exact_tabular;
  dims.K = K;
  dims.D = D;
  dims.T = T;
  dims.time_bins = 8;
  return make_model_fn(ModelParams::init(dims, seed));
}

}  // namespace

TEST_CASE("ratio estimator at the worked instance") {
  const Vec g = g_theta(Vec{0.7, 0.3}, 1, kHalf, Vec{0.5, 0.5}, kCont);
  CHECK(g[0] == doctest::Approx(2.2).epsilon(1e-13));
  CHECK(g[1] == 1.0);
}

TEST_CASE("ratio estimator matches its defining sum") {
  Rng rng(101);
  for (int it = 0; it < 50; ++it) {
    const int K = 2 + rng.uniform_int(5);
    const Vec m = testutil::random_simplex(rng, K);
    const Vec f = testutil::random_simplex(rng, K);
    const double t = testutil::time_for_abar(0.05 + 0.9 * rng.uniform());
    const int xd = rng.uniform_int(K);
    const Vec a = g_theta(f, xd, t, m, kCont);
    const Vec b = oracle::g_sum(f, xd, t, m, kCont);
    CHECK(testutil::max_abs_diff(a, b) < 1e-12);
  }
}

TEST_CASE("ratio estimator guards") {
  CHECK_THROWS_AS(g_theta(Vec{0.5, 0.5}, 0, 0.0, Vec{0.5, 0.5}, kCont), std::domain_error);
  CHECK_THROWS_AS(g_theta(Vec{0.5, 0.5}, 0, kHalf, Vec{0.0, 1.0}, kCont), std::domain_error);
}

TEST_CASE("ratio estimator at the exact posterior recovers true marginal ratios") {
  Rng rng(2024);
  oracle::JointEnum je(3, 2, [&] {
    std::vector<double> q0(9);
    double sum = 0.0;
    for (double& v : q0) {
      v = 0.05 + rng.uniform();
      sum += v;
    }
    for (double& v : q0) v /= sum;
    return q0;
  }());
  const StationaryDist m = StationaryDist::shared(Vec{0.3, 0.3, 0.4});
  const double t = testutil::time_for_abar(0.6);
  const std::vector<double> qt = je.qt(t, m, kCont);
  const Sequence x{1, 2};
  const std::vector<Vec> f = je.posterior_f(x, t, m, kCont);
  for (int d = 0; d < 2; ++d) {
    const Vec g = g_theta(f[static_cast<std::size_t>(d)], x[static_cast<std::size_t>(d)], t,
                          m.at(d), kCont);
    for (int y = 0; y < 3; ++y) {
      Sequence z = x;
      z[static_cast<std::size_t>(d)] = y;
      const double want = qt[static_cast<std::size_t>(je.pack(z))] /
                          qt[static_cast<std::size_t>(je.pack(x))];
      CHECK(g[static_cast<std::size_t>(y)] == doctest::Approx(want).epsilon(1e-10));
    }
  }
}

TEST_CASE("auxiliary normalization scalar at the hand case") {
  // K=2, D=1, z=[1], x0=[0], alpha_bar=0.5: the only neighbor is y=0 with
  // q ratio 0.75/0.25 and proposal ratio 1, so the scalar is 3.
  for (AuxKind kind : {AuxKind::uniform, AuxKind::forward_rate}) {
    AuxSampler aux{kind};
    const double v = m_st(Sequence{1}, Sequence{0}, kHalf, aux, StationaryDist::uniform(2), kCont);
    CHECK(v == doctest::Approx(3.0).epsilon(1e-13));
  }
}

TEST_CASE("auxiliary proposal weights and sampling") {
  const StationaryDist m = StationaryDist::shared(Vec{0.2, 0.3, 0.5});
  const Sequence x{0, 2};
  AuxSampler uni{AuxKind::uniform};
  CHECK(uni.weight(0, 0, x, kHalf, m, kCont) == 0.0);  // same category carries no weight
  CHECK(uni.weight(0, 1, x, kHalf, m, kCont) == 1.0);
  CHECK(uni.normalizer(x, kHalf, m, kCont) == 4.0);

  AuxSampler fwd{AuxKind::forward_rate};
  const double beta = beta_rate(kCont, kHalf);
  CHECK(fwd.weight(1, 0, x, kHalf, m, kCont) == doctest::Approx(beta * 0.2).epsilon(1e-14));
  CHECK(fwd.normalizer(x, kHalf, m, kCont) ==
        doctest::Approx(beta * (0.3 + 0.5 + 0.2 + 0.3)).epsilon(1e-13));

  // Draw frequencies follow the weights; every draw differs at one element.
  Rng rng(66);
  std::map<Sequence, int> counts;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const Sequence z = sample_auxiliary(x, uni, kHalf, m, kCont, rng);
    int diffs = 0;
    for (std::size_t d = 0; d < z.size(); ++d) diffs += z[d] != x[d];
    CHECK(diffs == 1);
    ++counts[z];
  }
  CHECK(counts.size() == 4);
  for (const auto& [z, c] : counts) CHECK(std::abs(c / static_cast<double>(n) - 0.25) < 0.02);
}

TEST_CASE("one-evaluation and two-evaluation objectives agree in expectation") {
  const ModelFn f = random_tabular_fn(2, 1, 50.0, 91);
  oracle::JointEnum je(2, 1, {0.35, 0.65});
  const StationaryDist m = StationaryDist::shared(Vec{0.4, 0.6});
  for (AuxKind kind : {AuxKind::uniform, AuxKind::forward_rate}) {
    AuxSampler aux{kind};
    const double one = je.expected_single_pass(f, kHalf, m, kCont);
    const double two = je.expected_two_pass(f, kHalf, aux, m, kCont);
    CHECK(one == doctest::Approx(two).epsilon(1e-10));
  }
}

TEST_CASE("two-evaluation objective rejects malformed auxiliaries") {
  const std::vector<Vec> f{Vec{0.5, 0.5}, Vec{0.5, 0.5}};
  const StationaryDist m = StationaryDist::uniform(2);
  AuxSampler aux{AuxKind::uniform};
  CHECK_THROWS_AS(ctmc_vlb_two_pass(f, f, Sequence{0, 0}, Sequence{0, 1}, Sequence{0, 1}, kHalf,
                                    aux, m, kCont),
                  std::invalid_argument);
  CHECK_THROWS_AS(ctmc_vlb_two_pass(f, f, Sequence{0, 0}, Sequence{0, 1}, Sequence{1, 0}, kHalf,
                                    aux, m, kCont),
                  std::invalid_argument);
  const NoiseSchedule disc = NoiseSchedule::linear(TimeMode::discrete, 10.0);
  CHECK_THROWS_AS(ctmc_vlb_two_pass(f, f, Sequence{0, 0}, Sequence{0, 1}, Sequence{1, 1}, 5.0,
                                    aux, m, disc),
                  std::domain_error);
  CHECK_THROWS_AS(ctmc_vlb_single_pass(f, Sequence{0, 0}, Sequence{0, 1}, 5.0, m, disc),
                  std::domain_error);
}

TEST_CASE("one-evaluation gradient matches finite differences") {
  Rng rng(404);
  const StationaryDist m = StationaryDist::shared(Vec{0.25, 0.35, 0.4});
  for (int it = 0; it < 10; ++it) {
    const double t = testutil::time_for_abar(0.1 + 0.8 * rng.uniform());
    std::vector<Vec> f{testutil::random_simplex(rng, 3), testutil::random_simplex(rng, 3)};
    const Sequence x0{rng.uniform_int(3), rng.uniform_int(3)};
    const Sequence x_t{rng.uniform_int(3), rng.uniform_int(3)};
    std::vector<Vec> dldf(2, Vec(3, 0.0));
    const double loss = ctmc_vlb_single_pass_grad(f, x0, x_t, t, m, kCont, dldf);
    CHECK(loss == doctest::Approx(ctmc_vlb_single_pass(f, x0, x_t, t, m, kCont)).epsilon(1e-12));
    for (int probe = 0; probe < 4; ++probe) {
      const std::size_t d = static_cast<std::size_t>(rng.uniform_int(2));
      const std::size_t k = static_cast<std::size_t>(rng.uniform_int(3));
      const double fd = testutil::central_diff(
          [&] { return ctmc_vlb_single_pass(f, x0, x_t, t, m, kCont); }, f[d][k], 1e-6);
      CHECK(testutil::rel_err(dldf[d][k], fd) < 1e-5);
    }
  }
}

TEST_CASE("two-evaluation gradient matches finite differences") {
  Rng rng(505);
  const StationaryDist m = StationaryDist::shared(Vec{0.25, 0.35, 0.4});
  AuxSampler aux{AuxKind::uniform};
  for (int it = 0; it < 10; ++it) {
    const double t = testutil::time_for_abar(0.1 + 0.8 * rng.uniform());
    std::vector<Vec> fx{testutil::random_simplex(rng, 3), testutil::random_simplex(rng, 3)};
    std::vector<Vec> fz{testutil::random_simplex(rng, 3), testutil::random_simplex(rng, 3)};
    const Sequence x0{rng.uniform_int(3), rng.uniform_int(3)};
    const Sequence x_t{rng.uniform_int(3), rng.uniform_int(3)};
    Sequence z_t = x_t;
    const std::size_t flip = static_cast<std::size_t>(rng.uniform_int(2));
    z_t[flip] = (z_t[flip] + 1 + rng.uniform_int(2)) % 3;
    std::vector<Vec> dx(2, Vec(3, 0.0)), dz(2, Vec(3, 0.0));
    const double loss = ctmc_vlb_two_pass_grad(fx, fz, x0, x_t, z_t, t, aux, m, kCont, dx, dz);
    CHECK(loss ==
          doctest::Approx(ctmc_vlb_two_pass(fx, fz, x0, x_t, z_t, t, aux, m, kCont)).epsilon(1e-12));
    for (int probe = 0; probe < 3; ++probe) {
      const std::size_t d = static_cast<std::size_t>(rng.uniform_int(2));
      const std::size_t k = static_cast<std::size_t>(rng.uniform_int(3));
      const double fdx = testutil::central_diff(
          [&] { return ctmc_vlb_two_pass(fx, fz, x0, x_t, z_t, t, aux, m, kCont); }, fx[d][k], 1e-6);
      CHECK(testutil::rel_err(dx[d][k], fdx) < 1e-5);
      const double fdz = testutil::central_diff(
          [&] { return ctmc_vlb_two_pass(fx, fz, x0, x_t, z_t, t, aux, m, kCont); }, fz[d][k], 1e-6);
      CHECK(testutil::rel_err(dz[d][k], fdz) < 1e-5);
    }
  }
}

TEST_CASE("aux kind string round trips") {
  CHECK(aux_kind_from_string(to_string(AuxKind::uniform)) == AuxKind::uniform);
  CHECK(aux_kind_from_string(to_string(AuxKind::forward_rate)) == AuxKind::forward_rate);
  CHECK(aux_kind_from_string("forward-rate") == AuxKind::forward_rate);
  CHECK_THROWS_AS(aux_kind_from_string("gibbs"), std::invalid_argument);
}
