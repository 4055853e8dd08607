#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "usd3/oracle.hpp"
#include "usd3/sampler.hpp"

using namespace usd3;

TEST_CASE("uniform grids hit evenly spaced knots") {
  const NoiseSchedule cont = NoiseSchedule::cosine(TimeMode::continuous, 1.0);
  const TimeGrid g = TimeGrid::uniform(cont, 4);
  REQUIRE(g.steps() == 4);
  CHECK(g.times == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
  CHECK_THROWS_AS(TimeGrid::uniform(cont, 0), std::invalid_argument);
}

TEST_CASE("discrete grids round to distinct integers") {
  const NoiseSchedule disc = NoiseSchedule::linear(TimeMode::discrete, 10);
  CHECK(TimeGrid::uniform(disc, 4).times == std::vector<double>{0.0, 3.0, 5.0, 8.0, 10.0});
  const NoiseSchedule small = NoiseSchedule::linear(TimeMode::discrete, 4);
  CHECK(TimeGrid::uniform(small, 4).times == std::vector<double>{0.0, 1.0, 2.0, 3.0, 4.0});
  // No room for more knots than integer times.
  CHECK_THROWS_AS(TimeGrid::uniform(small, 5), std::invalid_argument);
  // Collisions from rounding get pushed apart.
  const TimeGrid crowded = TimeGrid::geometric(small, 3, 0.25);
  CHECK(crowded.times == std::vector<double>{0.0, 1.0, 2.0, 4.0});
}

TEST_CASE("geometric grids shrink by the ratio toward zero") {
  const NoiseSchedule cont = NoiseSchedule::cosine(TimeMode::continuous, 1.0);
  const TimeGrid g = TimeGrid::geometric(cont, 3, 0.25);
  CHECK(g.times == std::vector<double>{0.0, 0.0625, 0.25, 1.0});
  CHECK_THROWS_AS(TimeGrid::geometric(cont, 3, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(TimeGrid::geometric(cont, 3, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(TimeGrid::geometric(cont, 0), std::invalid_argument);
}

TEST_CASE("grid validation rejects malformed knot lists") {
  const NoiseSchedule cont = NoiseSchedule::cosine(TimeMode::continuous, 1.0);
  TimeGrid g;
  g.times = {0.0, 0.5, 0.9};
  CHECK_THROWS_AS(g.validate(cont), std::invalid_argument);  // last != T
  g.times = {0.1, 0.5, 1.0};
  CHECK_THROWS_AS(g.validate(cont), std::invalid_argument);  // first != 0
  g.times = {0.0, 0.6, 0.5, 1.0};
  CHECK_THROWS_AS(g.validate(cont), std::invalid_argument);  // not increasing
  g.times = {0.0};
  CHECK_THROWS_AS(g.validate(cont), std::invalid_argument);  // too short
  const NoiseSchedule disc = NoiseSchedule::linear(TimeMode::discrete, 4);
  g.times = {0.0, 1.5, 4.0};
  CHECK_THROWS_AS(g.validate(disc), std::invalid_argument);  // non-integer knot
}

namespace {

// alpha_bar(t) = e^{-2t}; at t = ln(2)/2 this gives alpha_bar = 1/2, beta = 2.
struct CorrectorFixture {
  NoiseSchedule sched = NoiseSchedule::constant_rate(TimeMode::continuous, 1.0, 2.0);
  double t = 0.5 * std::log(2.0);
  StationaryDist m = StationaryDist::uniform(2);
  ModelParams params;

  CorrectorFixture() {
    ModelDims dims;
    dims.backend = Backend::exact_tabular;
    dims.K = 2;
    dims.D = 1;
    dims.T = 1.0;
    dims.time_bins = 4;
    params = ModelParams::zeros(dims);
    // t lands in bin 1; seeing x = [1] the model predicts f = [0.7, 0.3].
    REQUIRE(time_bin(dims, t) == 1);
    testutil::set_tabular_probs(params, 1, 1, 0, {0.7, 0.3});
  }
};

}  // namespace

TEST_CASE("one corrector round follows the proposal law") {
  // By hand: coef = 2 - 0.5*0.3/0.75 = 1.8, rho = 1, so the move probability is
  // dt*beta*(coef*m_0 + rho*f_0) = 0.05*2*(0.9 + 0.7) = 0.16.
  const CorrectorFixture fx;
  Rng root(2024);
  int moved = 0;
  const int n = 30000;
  McmcStats stats;
  for (int i = 0; i < n; ++i) {
    Rng rng = root.child(static_cast<std::uint64_t>(i) + 1);
    const Sequence out =
        mcmc_correct(fx.params, {1}, fx.t, 0.05, 1, fx.m, fx.sched, rng, &stats);
    if (out[0] == 0) ++moved;
  }
  CHECK(stats.rounds == n);
  CHECK(stats.clipped == 0);
  CHECK(std::abs(static_cast<double>(moved) / n - 0.16) < 0.012);
}

TEST_CASE("oversized proposals clip to certain moves") {
  const CorrectorFixture fx;
  Rng rng(7);
  McmcStats stats;
  // dt = 100 pushes the off-state mass far above 1; clipping leaves zero mass
  // on staying put, so each round flips deterministically.
  Sequence out = mcmc_correct(fx.params, {1}, fx.t, 100.0, 1, fx.m, fx.sched, rng, &stats);
  CHECK(out == Sequence{0});
  CHECK(stats.clipped == 1);
  out = mcmc_correct(fx.params, {1}, fx.t, 100.0, 2, fx.m, fx.sched, rng, &stats);
  CHECK(out == Sequence{1});  // flips 1 -> 0 -> 1
  CHECK(stats.clipped == 3);
  CHECK(stats.rounds == 3);
}

TEST_CASE("corrector guards its domain") {
  const CorrectorFixture fx;
  Rng rng(1);
  CHECK_THROWS_AS(mcmc_correct(fx.params, {1}, fx.t, -0.01, 1, fx.m, fx.sched, rng),
                  std::invalid_argument);
  // alpha_bar(0) = 1 has no corrector rates.
  CHECK_THROWS_AS(mcmc_correct(fx.params, {1}, 0.0, 0.01, 1, fx.m, fx.sched, rng),
                  std::invalid_argument);
  // Zero rounds is a no-op that touches nothing.
  McmcStats stats;
  CHECK(mcmc_correct(fx.params, {1}, fx.t, 0.01, 0, fx.m, fx.sched, rng, &stats) == Sequence{1});
  CHECK(stats.rounds == 0);
}

TEST_CASE("corrector runs only inside the trailing step window") {
  const NoiseSchedule sched = NoiseSchedule::cosine(TimeMode::continuous, 1.0);
  const StationaryDist m = StationaryDist::uniform(3);
  ModelDims dims;
  dims.K = 3;
  dims.D = 2;
  dims.T = 1.0;
  dims.time_bins = 8;
  const ModelParams params = ModelParams::init(dims, 5);
  const TimeGrid grid = TimeGrid::uniform(sched, 4);

  McmcOptions mcmc;
  mcmc.enabled = true;
  mcmc.dt = 0.001;
  mcmc.steps = 2;

  auto rounds_with_start = [&](int start_step) {
    mcmc.start_step = start_step;
    McmcStats stats;
    Rng rng(17);
    generate(params, grid, m, sched, rng, mcmc, &stats);
    return stats.rounds;
  };
  CHECK(rounds_with_start(0) == 0);
  CHECK(rounds_with_start(2) == 4);   // remaining in {1,2}, 2 rounds each
  CHECK(rounds_with_start(10) == 6);  // remaining in {1,2,3}
}

TEST_CASE("generation is deterministic and batch samples use child streams") {
  const NoiseSchedule sched = NoiseSchedule::cosine(TimeMode::continuous, 1.0);
  const StationaryDist m = StationaryDist::uniform(3);
  ModelDims dims;
  dims.K = 3;
  dims.D = 4;
  dims.T = 1.0;
  dims.time_bins = 8;
  const ModelParams params = ModelParams::init(dims, 21);
  const TimeGrid grid = TimeGrid::uniform(sched, 8);

  Rng a(5), b(5);
  const Sequence s1 = generate(params, grid, m, sched, a);
  const Sequence s2 = generate(params, grid, m, sched, b);
  CHECK(s1 == s2);
  REQUIRE(s1.size() == 4);
  for (int v : s1) {
    CHECK(v >= 0);
    CHECK(v < 3);
  }

  setenv("USD3_THREADS", "1", 1);
  const std::vector<Sequence> batch = generate_batch(params, grid, m, sched, 5, 6);
  setenv("USD3_THREADS", "3", 1);
  const std::vector<Sequence> batch2 = generate_batch(params, grid, m, sched, 5, 6);
  unsetenv("USD3_THREADS");
  CHECK(batch == batch2);
  REQUIRE(batch.size() == 6);
  Rng root(5);
  for (int i = 0; i < 6; ++i) {
    Rng child = root.child(static_cast<std::uint64_t>(i) + 1);
    CHECK(batch[static_cast<std::size_t>(i)] == generate(params, grid, m, sched, child));
  }
  CHECK_THROWS_AS(generate_batch(params, grid, m, sched, 5, -1), std::invalid_argument);
}

TEST_CASE("finer grids do not worsen the generated joint") {
  // Correlated two-element target; per-element posteriors come from exhaustive
  // enumeration, so all remaining error is time discretization + binning.
  const NoiseSchedule sched = NoiseSchedule::cosine(TimeMode::continuous, 1.0);
  const StationaryDist m = StationaryDist::uniform(2);
  const std::vector<double> q0 = {0.45, 0.05, 0.05, 0.45};
  const oracle::JointEnum joint(2, 2, q0);

  ModelDims dims;
  dims.backend = Backend::exact_tabular;
  dims.K = 2;
  dims.D = 2;
  dims.T = 1.0;
  dims.time_bins = 64;
  ModelParams params = ModelParams::zeros(dims);
  for (int bin = 0; bin < dims.time_bins; ++bin) {
    const double t_rep = (static_cast<double>(bin) + 0.5) / dims.time_bins;
    for (std::int64_t j = 0; j < dims.joint_states(); ++j) {
      const Sequence x_t = joint.unpack(j);
      const std::vector<Vec> f = joint.posterior_f(x_t, t_rep, m, sched);
      for (int d = 0; d < dims.D; ++d)
        testutil::set_tabular_probs(params, bin, j, d, f[static_cast<std::size_t>(d)]);
    }
  }

  auto tv_for_steps = [&](int steps) {
    const TimeGrid grid = TimeGrid::uniform(sched, steps);
    const std::vector<Sequence> samples = generate_batch(params, grid, m, sched, 99, 20000);
    return oracle::tv_distance(joint.empirical_joint(samples), q0);
  };
  const double tv5 = tv_for_steps(5);
  const double tv20 = tv_for_steps(20);
  const double tv100 = tv_for_steps(100);
  CHECK(tv20 <= tv5 + 0.015);
  CHECK(tv100 <= tv20 + 0.015);
  CHECK(tv100 < 0.06);
}
