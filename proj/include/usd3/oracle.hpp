#pragma once

// Brute-force reference implementations backing the equivalence tests and the
// `verify` command. Everything here recomputes results from first principles
// (materialized transition matrices, explicit sums over x0, event-driven
// simulation, exhaustive joint enumeration) on a code path separate from the
// engine's closed forms.

#include <cstdint>
#include <string>
#include <vector>

#include "usd3/core.hpp"
#include "usd3/forward.hpp"
#include "usd3/loss_continuous.hpp"
#include "usd3/schedules.hpp"

namespace usd3::oracle {

// Bayes posterior q(x_s | x_t, x0) from materialized matrices:
// numerator[k] = Qbar_{t|s}[k][x_t] * Qbar_s[x0][k], normalized.
Vec posterior_bayes(int x_t, int x0, double s, double t, const Vec& m,
                    const NoiseSchedule& sched);

// sum_{x0} q(x_s | x_t, x0) f[x0].
Vec p_theta_marginalized(const Vec& f, int x_t, double s, double t, const Vec& m,
                         const NoiseSchedule& sched);

// Ratio estimator by its defining sum: g[y] = sum_{x0} f[x0] *
// q_{t|0}(y | x0) / q_{t|0}(xd | x0).
Vec g_sum(const Vec& f, int xd, double t, const Vec& m, const NoiseSchedule& sched);

// KL(q || p) with 0*log(0/.) = 0; q>0 where p=0 gives +infinity.
double exact_kl(const Vec& q, const Vec& p);

// 0.5 * L1 between two same-length nonnegative vectors.
double tv_distance(const std::vector<double>& p, const std::vector<double>& q);

struct GillespieStats {
  std::int64_t events = 0;   // accepted thinning events (Poisson with mean integral of beta)
  std::int64_t jumps = 0;    // events that changed the state
  std::int64_t rebuilds = 0; // envelope violations encountered
};

// Exact event-driven simulation of the forward CTMC on [0, t_end], per
// element, time-inhomogeneous rates handled by thinning against an envelope
// of 1.1 * max beta on a 256-point grid. An accepted event resamples the
// element from m; a resample that lands elsewhere is a jump with target
// distributed as m restricted to y != x.
Sequence gillespie_forward(const Sequence& x0, double t_end, const NoiseSchedule& sched,
                           const StationaryDist& m, Rng& rng, GillespieStats* stats = nullptr);

// Exhaustive enumeration over the joint state space K^D (<= 4096): exact
// noised marginals, exact denoising posteriors, true backward marginals, and
// exact expected losses.
class JointEnum {
 public:
  // q0 over joint states, indexed like joint_index (element 0 fastest).
  JointEnum(int K, int D, std::vector<double> q0);
  static JointEnum from_dataset(const std::vector<Sequence>& data, int K, int D);

  int K() const { return K_; }
  int D() const { return D_; }
  std::int64_t states() const { return static_cast<std::int64_t>(q0_.size()); }
  const std::vector<double>& q0() const { return q0_; }
  Sequence unpack(std::int64_t idx) const;
  std::int64_t pack(const Sequence& x) const;

  // Joint distribution of x_t.
  std::vector<double> qt(double t, const StationaryDist& m, const NoiseSchedule& sched) const;

  // Per-element exact posterior q(x0^d = . | x_t) - the ideal f.
  std::vector<Vec> posterior_f(const Sequence& x_t, double t, const StationaryDist& m,
                               const NoiseSchedule& sched) const;

  // True backward marginal q(x_s^d = . | x_t) = sum_{x0} q(x0|x_t) q(x_s|x_t,x0).
  std::vector<Vec> backward_marginal(const Sequence& x_t, double s, double t,
                                     const StationaryDist& m, const NoiseSchedule& sched) const;

  // E_{x0 ~ q0, x_t ~ q(.|x0)}[single-pass loss].
  double expected_single_pass(const ModelFn& f, double t, const StationaryDist& m,
                              const NoiseSchedule& sched) const;
  // Same expectation with the auxiliary z summed out against its sampler.
  double expected_two_pass(const ModelFn& f, double t, const AuxSampler& aux,
                           const StationaryDist& m, const NoiseSchedule& sched) const;

  // Joint distribution over x0 of a backward pass (for generation TV checks):
  // empirical counting is left to callers; this returns exact q(x0) again.
  std::vector<double> empirical_joint(const std::vector<Sequence>& samples) const;

 private:
  int K_;
  int D_;
  std::vector<double> q0_;
};

struct VerifyCheck {
  std::string name;
  double max_dev = 0.0;
  double tol = 0.0;
  bool pass = false;
};

// The closed-form equivalence suite: posterior, backward marginalization,
// difference vector, ratio estimator, and the exact-KL cross-check; 1000
// random instances per check, K in {2..8}, both time modes.
std::vector<VerifyCheck> run_verify_suite(std::uint64_t seed);

}  // namespace usd3::oracle
