#pragma once

// The shared forward noising process: transition matrices, conditional
// marginals, the posterior q(x_s | x_t, x_0), reparameterized forward
// sampling, and forward CTMC rates. Every formula works off the implicit
// (alpha_bar, m) form; dense matrices are materialized only on request.

#include "usd3/core.hpp"
#include "usd3/schedules.hpp"

namespace usd3 {

// Stationary distribution(s). One shared vector, or one per element.
struct StationaryDist {
  std::vector<Vec> per_element;

  static StationaryDist uniform(int K);
  static StationaryDist shared(Vec m);

  const Vec& at(int d) const {
    return per_element.size() == 1 ? per_element[0] : per_element.at(static_cast<std::size_t>(d));
  }
  int K() const { return static_cast<int>(per_element.at(0).size()); }
};

// Q = abar*I + (1-abar)*1 m^T, rows indexed by the source category.
std::vector<Vec> transition_matrix(double abar, const Vec& m);

// q(x_t | x_0) = abar_t * e_{x0} + (1 - abar_t) * m.
Vec marginal_t_given_0(int x0, double abar_t, const Vec& m);

// Element-wise: keep x0^d with probability alpha_bar(t), else draw from m^d.
Sequence sample_forward(const Sequence& x0, double t, const NoiseSchedule& sched,
                        const StationaryDist& m, Rng& rng);

struct PosteriorCoeffs {
  double lambda = 0.0;
  double mu = 0.0;
  double abar_cond = 1.0;  // alpha_bar(t|s)
  double phi = 0.0;
};

// Coefficients shared by the posterior, the backward closed form, and the
// difference-vector/L2 losses. s=0 returns lambda=mu=phi=0 exactly.
PosteriorCoeffs posterior_coefficients(double s, double t, int x_t, const Vec& m,
                                       const NoiseSchedule& sched);
PosteriorCoeffs posterior_coefficients_from_abars(double abar_s, double abar_t, double m_dot_xt);

// q(x_s | x_t, x_0) via the two-case closed form:
//   x_t == x_0: (1-lambda) e_{x_t} + lambda m
//   x_t != x_0: (1-mu) e_{x0} + mu*abar_cond e_{x_t} + mu*(1-abar_cond) m
Vec posterior_q(int x_t, int x0, double s, double t, const Vec& m, const NoiseSchedule& sched);

// Forward CTMC rates, beta(t)(1 m^T - I):
// row form r_t(.|x)[y]: rate x -> y, equals beta*(m - e_x).
// column form r_t(x|.)[y]: rate y -> x, equals beta*(<x,m> 1 - e_x).
Vec forward_rate_row(int x, double t, const Vec& m, const NoiseSchedule& sched);
Vec forward_rate_col(int x, double t, const Vec& m, const NoiseSchedule& sched);

}  // namespace usd3
