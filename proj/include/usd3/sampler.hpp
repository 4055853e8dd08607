#pragma once

// Backward generation over an arbitrary time grid with the optional MCMC
// corrector, plus batched generation with independent per-sample streams.

#include <cstdint>
#include <vector>

#include "usd3/backward.hpp"
#include "usd3/core.hpp"
#include "usd3/forward.hpp"
#include "usd3/model.hpp"
#include "usd3/schedules.hpp"

namespace usd3 {

// Strictly increasing times 0 = t_0 < t_1 < ... < t_n = T. Discrete-mode
// grids hold integers.
struct TimeGrid {
  std::vector<double> times;

  // n+1 knots. Uniform spacing; discrete mode rounds to distinct integers.
  static TimeGrid uniform(const NoiseSchedule& sched, int steps);
  // Geometric spacing of the positive knots (t_1..t_n), denser near 0.
  static TimeGrid geometric(const NoiseSchedule& sched, int steps, double ratio = 0.25);

  int steps() const { return static_cast<int>(times.size()) - 1; }
  void validate(const NoiseSchedule& sched) const;
};

struct McmcOptions {
  bool enabled = false;
  double dt = 0.01;    // delta-n step size
  int steps = 0;       // rounds per correction
  int start_step = 0;  // apply only while remaining generation steps <= this
};

struct McmcStats {
  std::int64_t rounds = 0;
  std::int64_t clipped = 0;  // elements whose proposal mass exceeded 1
};

// N rounds of the corrector CTMC at time t. Per round, one model evaluation
// feeds every element's proposal
//   p = dt*beta(t) [ (2 - abar<f,x>/(abar+(1-abar)<x,m>)) m + (abar/(1-abar)) f ] o (1-x)
// and the element resamples from Cat(p + (1 - 1^T p) x); total proposal mass
// above 1 scales the vector down (counted in stats).
Sequence mcmc_correct(const ModelParams& params, const Sequence& x, double t, double dt,
                      int steps, const StationaryDist& m, const NoiseSchedule& sched, Rng& rng,
                      McmcStats* stats = nullptr, bool use_ema = false);

// One sample: x ~ Cat(m) at t_n, then backward steps down the grid; corrector
// (when enabled) runs after each step at the new time while the remaining
// step count is within start_step (never at t=0).
Sequence generate(const ModelParams& params, const TimeGrid& grid, const StationaryDist& m,
                  const NoiseSchedule& sched, Rng& rng, const McmcOptions& mcmc = {},
                  McmcStats* stats = nullptr, bool use_ema = false);

// count independent samples via child streams; deterministic for any thread
// budget.
std::vector<Sequence> generate_batch(const ModelParams& params, const TimeGrid& grid,
                                     const StationaryDist& m, const NoiseSchedule& sched,
                                     std::uint64_t seed, int count,
                                     const McmcOptions& mcmc = {}, McmcStats* stats = nullptr,
                                     bool use_ema = false);

}  // namespace usd3
