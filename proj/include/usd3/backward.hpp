#pragma once

// Closed-form backward parameterization p_theta(x_s | x_t) and the
// reparameterized backward sampling step shared by discrete- and
// continuous-time generation.

#include "usd3/core.hpp"
#include "usd3/forward.hpp"
#include "usd3/schedules.hpp"

namespace usd3 {

struct BackwardBranchProbs {
  double p_pred = 1.0;   // draw predicted x0 from f
  double p_keep = 0.0;   // keep x_t
  double p_noise = 0.0;  // draw from m
};

// gamma = (mu - lambda - mu*abar_cond) * <f, x_t>.
double gamma_coeff(const Vec& f, int x_t, double s, double t, const Vec& m,
                   const NoiseSchedule& sched);

// p_theta(x_s | x_t) = (1-mu) f + (mu*abar_cond + gamma) e_{x_t}
//                    + (mu*(1-abar_cond) - gamma) m.
// Equals the full marginalization sum_{x0} q(x_s|x_t,x0) f[x0] exactly.
Vec p_theta_s_given_t(const Vec& f, int x_t, double s, double t, const Vec& m,
                      const NoiseSchedule& sched);

// The three mixture weights of p_theta; tiny gamma-induced negatives are
// clamped and the triple renormalized.
BackwardBranchProbs backward_branch_probs(const Vec& f, int x_t, double s, double t,
                                          const Vec& m, const NoiseSchedule& sched);

// One denoising step for all D elements, consuming the precomputed f outputs
// of a single model evaluation at (x_t, t).
Sequence backward_step(const std::vector<Vec>& f_outs, const Sequence& x_t, double s, double t,
                       const StationaryDist& m, const NoiseSchedule& sched, Rng& rng);

}  // namespace usd3
