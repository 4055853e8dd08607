#include "usd3/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>

#include "usd3/threading.hpp"

namespace usd3 {

namespace {

// Discrete grids need distinct integer knots; round, then push collisions up.
std::vector<double> integerize(std::vector<double> times, double T) {
  const int n = static_cast<int>(times.size()) - 1;
  if (n > static_cast<int>(T))
    throw std::invalid_argument("time grid: more steps than discrete times available");
  for (double& t : times) t = std::round(t);
  times.front() = 0.0;
  times.back() = T;
  for (int i = 1; i < n; ++i) times[static_cast<std::size_t>(i)] =
      std::max(times[static_cast<std::size_t>(i)], times[static_cast<std::size_t>(i - 1)] + 1.0);
  for (int i = n - 1; i >= 1; --i) times[static_cast<std::size_t>(i)] =
      std::min(times[static_cast<std::size_t>(i)], times[static_cast<std::size_t>(i + 1)] - 1.0);
  return times;
}

}  // namespace

TimeGrid TimeGrid::uniform(const NoiseSchedule& sched, int steps) {
  if (steps < 1) throw std::invalid_argument("time grid: steps >= 1 required");
  TimeGrid g;
  g.times.resize(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i)
    g.times[static_cast<std::size_t>(i)] = sched.T * static_cast<double>(i) / steps;
  g.times.back() = sched.T;
  if (sched.mode == TimeMode::discrete) g.times = integerize(std::move(g.times), sched.T);
  g.validate(sched);
  return g;
}

TimeGrid TimeGrid::geometric(const NoiseSchedule& sched, int steps, double ratio) {
  if (steps < 1) throw std::invalid_argument("time grid: steps >= 1 required");
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("time grid: ratio in (0,1)");
  TimeGrid g;
  g.times.assign(static_cast<std::size_t>(steps) + 1, 0.0);
  double t = sched.T;
  for (int i = steps; i >= 1; --i) {
    g.times[static_cast<std::size_t>(i)] = t;
    t *= ratio;
  }
  if (sched.mode == TimeMode::discrete) g.times = integerize(std::move(g.times), sched.T);
  g.validate(sched);
  return g;
}

void TimeGrid::validate(const NoiseSchedule& sched) const {
  if (times.size() < 2) throw std::invalid_argument("time grid: need at least 2 knots");
  if (times.front() != 0.0 || times.back() != sched.T)
    throw std::invalid_argument("time grid: endpoints must be exactly 0 and T");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw std::invalid_argument("time grid: not strictly increasing");
    if (sched.mode == TimeMode::discrete && times[i] != std::floor(times[i]))
      throw std::invalid_argument("time grid: discrete mode needs integer times");
  }
}

Sequence mcmc_correct(const ModelParams& params, const Sequence& x, double t, double dt,
                      int steps, const StationaryDist& m, const NoiseSchedule& sched, Rng& rng,
                      McmcStats* stats, bool use_ema) {
  if (dt < 0.0) throw std::invalid_argument("mcmc_correct: dt >= 0 required");
  Sequence cur = x;
  if (steps <= 0 || dt == 0.0) return cur;
  const double abar = alpha_bar(sched, t);
  if (abar >= 1.0) throw std::invalid_argument("mcmc_correct: undefined at alpha_bar = 1");
  const double beta = beta_any_mode(sched, t);
  const double rho = abar / (1.0 - abar);

  for (int round = 0; round < steps; ++round) {
    const std::vector<Vec> f = predict(params, cur, t, use_ema);
    Sequence next(cur.size());
    for (std::size_t d = 0; d < cur.size(); ++d) {
      const Vec& md = m.at(static_cast<int>(d));
      const int xd = cur[d];
      const double coef =
          2.0 - abar * f[d][static_cast<std::size_t>(xd)] /
                    (abar + (1.0 - abar) * md[static_cast<std::size_t>(xd)]);
      Vec p(md.size(), 0.0);
      double total = 0.0;
      for (std::size_t y = 0; y < md.size(); ++y) {
        if (static_cast<int>(y) == xd) continue;
        p[y] = dt * beta * (coef * md[y] + rho * f[d][y]);
        total += p[y];
      }
      if (total > 1.0) {
        for (double& v : p) v /= total;
        total = 1.0;
        if (stats) ++stats->clipped;
      }
      p[static_cast<std::size_t>(xd)] = 1.0 - total;
      next[d] = sample_categorical(p, rng);
    }
    cur = std::move(next);
    if (stats) ++stats->rounds;
  }
  return cur;
}

Sequence generate(const ModelParams& params, const TimeGrid& grid, const StationaryDist& m,
                  const NoiseSchedule& sched, Rng& rng, const McmcOptions& mcmc,
                  McmcStats* stats, bool use_ema) {
  grid.validate(sched);
  Sequence x(static_cast<std::size_t>(params.dims.D));
  for (int d = 0; d < params.dims.D; ++d) x[static_cast<std::size_t>(d)] = sample_categorical(m.at(d), rng);

  for (int i = grid.steps(); i >= 1; --i) {
    const double s = grid.times[static_cast<std::size_t>(i - 1)];
    const double t = grid.times[static_cast<std::size_t>(i)];
    const std::vector<Vec> f = predict(params, x, t, use_ema);
    x = backward_step(f, x, s, t, m, sched, rng);
    // Remaining steps i-1; correct at the sample's new time while inside the
    // start window. t=0 has no corrector (alpha_bar = 1).
    const int remaining = i - 1;
    if (mcmc.enabled && mcmc.steps > 0 && remaining >= 1 && remaining <= mcmc.start_step)
      x = mcmc_correct(params, x, s, mcmc.dt, mcmc.steps, m, sched, rng, stats, use_ema);
  }
  return x;
}

std::vector<Sequence> generate_batch(const ModelParams& params, const TimeGrid& grid,
                                     const StationaryDist& m, const NoiseSchedule& sched,
                                     std::uint64_t seed, int count, const McmcOptions& mcmc,
                                     McmcStats* stats, bool use_ema) {
  if (count < 0) throw std::invalid_argument("generate_batch: count >= 0");
  std::vector<Sequence> out(static_cast<std::size_t>(count));
  std::vector<McmcStats> per(static_cast<std::size_t>(count));
  Rng root(seed);
  parallel_for(static_cast<std::size_t>(count), [&](std::size_t i) {
    Rng rng = root.child(i + 1);
    out[i] = generate(params, grid, m, sched, rng, mcmc, stats ? &per[i] : nullptr, use_ema);
  });
  if (stats) {
    for (const McmcStats& s : per) {
      stats->rounds += s.rounds;
      stats->clipped += s.clipped;
    }
  }
  return out;
}

}  // namespace usd3
