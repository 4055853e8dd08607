#pragma once

// Continuous-time CTMC objectives: the marginal-ratio estimator g, the
// two-pass auxiliary-variable negative VLB, and the single-pass simplified
// loss that needs one model evaluation.

#include <functional>

#include "usd3/core.hpp"
#include "usd3/forward.hpp"
#include "usd3/schedules.hpp"

namespace usd3 {

// Model evaluation: per-element distributions over x0 given (x_t, t).
using ModelFn = std::function<std::vector<Vec>(const Sequence&, double)>;

enum class AuxKind { uniform, forward_rate };

// Proposal weights S_t for the auxiliary sequence z, nonzero only on
// sequences differing from x at exactly one element.
struct AuxSampler {
  AuxKind kind = AuxKind::uniform;

  // S_t^d(y | x^{1:D}) for replacing element d (current value x[d]) with y.
  double weight(int d, int y, const Sequence& x, double t, const StationaryDist& m,
                const NoiseSchedule& sched) const;
  // Normalizer over all single-element changes of x.
  double normalizer(const Sequence& x, double t, const StationaryDist& m,
                    const NoiseSchedule& sched) const;
};

// Ratio estimator g_t(y | x) per element d: entry y estimates
// q_t(..., x^d = y, ...) / q_t(x); entry at x^d is exactly 1.
Vec g_theta(const Vec& f_d, int xd, double t, const Vec& m, const NoiseSchedule& sched);

// The normalization scalar for the auxiliary variable z given x0.
double m_st(const Sequence& z, const Sequence& x0, double t, const AuxSampler& aux,
            const StationaryDist& m, const NoiseSchedule& sched);

// Two-pass objective: needs f at x_t and at z_t (z differs from x_t at exactly
// one element).
double ctmc_vlb_two_pass(const std::vector<Vec>& f_at_x, const std::vector<Vec>& f_at_z,
                         const Sequence& x0, const Sequence& x_t, const Sequence& z_t, double t,
                         const AuxSampler& aux, const StationaryDist& m,
                         const NoiseSchedule& sched);
double ctmc_vlb_two_pass(const ModelFn& f, const Sequence& x0, const Sequence& x_t,
                         const Sequence& z_t, double t, const AuxSampler& aux,
                         const StationaryDist& m, const NoiseSchedule& sched);
// Gradients with respect to the two model evaluations.
double ctmc_vlb_two_pass_grad(const std::vector<Vec>& f_at_x, const std::vector<Vec>& f_at_z,
                              const Sequence& x0, const Sequence& x_t, const Sequence& z_t,
                              double t, const AuxSampler& aux, const StationaryDist& m,
                              const NoiseSchedule& sched, std::vector<Vec>& dldf_x,
                              std::vector<Vec>& dldf_z);

// Single-pass objective (one model evaluation at x_t).
double ctmc_vlb_single_pass(const std::vector<Vec>& f_at_x, const Sequence& x0,
                            const Sequence& x_t, double t, const StationaryDist& m,
                            const NoiseSchedule& sched);
double ctmc_vlb_single_pass_grad(const std::vector<Vec>& f_at_x, const Sequence& x0,
                                 const Sequence& x_t, double t, const StationaryDist& m,
                                 const NoiseSchedule& sched, std::vector<Vec>& dldf);

// Draw z differing from x_t at exactly one element, with probability
// proportional to the sampler's S_t weights.
Sequence sample_auxiliary(const Sequence& x_t, const AuxSampler& aux, double t,
                          const StationaryDist& m, const NoiseSchedule& sched, Rng& rng);

std::string to_string(AuxKind kind);
AuxKind aux_kind_from_string(const std::string& s);

}  // namespace usd3
