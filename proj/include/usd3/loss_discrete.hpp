#pragma once

// Discrete-time training objectives: exact negative-VLB term, CE loss, the
// closed-form difference vector p_theta - q, its quadratic KL approximation,
// the clipped L2 simplification, and the combined loss dispatch. Functions
// with a *_grad suffix also accumulate dLoss/df for the model backward pass.

#include "usd3/core.hpp"
#include "usd3/forward.hpp"
#include "usd3/schedules.hpp"

namespace usd3 {

enum class LossMode { usd3, usd3_star, ce_only, vlb_only };

struct LossBreakdown {
  double vlb = 0.0;
  double ce = 0.0;
  double l2 = 0.0;
  double total = 0.0;
  double ce_weight = 0.0;
};

struct LossConfig {
  LossMode mode = LossMode::usd3;
  double ce_weight = -1.0;  // < 0 picks the mode default (usd3 0.001, usd3_star 1.0)
  bool phi_clip = true;
  double s_ratio = 0.95;  // continuous-mode L2 uses (s, t) = (s_ratio*t, t)
};

double resolved_ce_weight(const LossConfig& cfg);

// Sum over elements of KL(q(x_{t-1}^d | x_t^d, x0^d) || p_theta(x_{t-1}^d | x_t)),
// s = t-1; at t = 1 this is the reconstruction term -log p_theta(x0 | x1).
// A p=0 category inside q's support yields +infinity.
double vlb_term(const std::vector<Vec>& f_outs, const Sequence& x_t, const Sequence& x0,
                double t, const StationaryDist& m, const NoiseSchedule& sched);
double vlb_term_grad(const std::vector<Vec>& f_outs, const Sequence& x_t, const Sequence& x0,
                     double t, const StationaryDist& m, const NoiseSchedule& sched,
                     std::vector<Vec>& dldf);

// Sum over elements of -log f[x0^d].
double ce_loss(const std::vector<Vec>& f_outs, const Sequence& x0);
double ce_loss_grad(const std::vector<Vec>& f_outs, const Sequence& x0, double weight,
                    std::vector<Vec>& dldf);

// (1-mu) [ (f - e_{x0}) + phi <f - e_{x0}, x_t> (e_{x_t} - m) ]; sums to 0.
Vec delta_p(const Vec& f, int x_t, int x0, double s, double t, const Vec& m,
            const NoiseSchedule& sched);

// sum_k delta_p[k]^2 / q[k], the literal quadratic form (it carries twice the
// standard second-order KL expansion; tests pin the factor).
double kl_approx(const Vec& f, int x_t, int x0, double s, double t, const Vec& m,
                 const NoiseSchedule& sched);

// || f - e_{x0} + min(1, phi) <f - e_{x0}, x_t> (e_{x_t} - m) ||^2 per element;
// phi_clip=false uses the raw phi.
double l2_simplified(const Vec& f, int x_t, int x0, double s, double t, const Vec& m,
                     const NoiseSchedule& sched, bool phi_clip = true);
double l2_simplified_grad(const Vec& f, int x_t, int x0, double s, double t, const Vec& m,
                          const NoiseSchedule& sched, bool phi_clip, Vec& dldf_elem);

// Sequence-level L2 with the mode-appropriate (s, t) pair.
double l2_seq(const std::vector<Vec>& f_outs, const Sequence& x_t, const Sequence& x0,
              double s, double t, const StationaryDist& m, const NoiseSchedule& sched,
              bool phi_clip);

// Combined loss for single-model-evaluation modes. In continuous mode, usd3
// and vlb_only use the single-pass CTMC objective; in discrete mode the exact
// per-step VLB term. Gradient variant accumulates into dldf (resized/zeroed).
LossBreakdown combined_loss(const LossConfig& cfg, const std::vector<Vec>& f_outs,
                            const Sequence& x_t, const Sequence& x0, double t,
                            const StationaryDist& m, const NoiseSchedule& sched);
LossBreakdown combined_loss_grad(const LossConfig& cfg, const std::vector<Vec>& f_outs,
                                 const Sequence& x_t, const Sequence& x0, double t,
                                 const StationaryDist& m, const NoiseSchedule& sched,
                                 std::vector<Vec>& dldf);

std::string to_string(LossMode mode);
LossMode loss_mode_from_string(const std::string& s);

}  // namespace usd3
