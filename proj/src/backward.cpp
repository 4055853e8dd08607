#include "usd3/backward.hpp"

#include <stdexcept>

namespace usd3 {

double gamma_coeff(const Vec& f, int x_t, double s, double t, const Vec& m,
                   const NoiseSchedule& sched) {
  const PosteriorCoeffs c = posterior_coefficients(s, t, x_t, m, sched);
  return (c.mu - c.lambda - c.mu * c.abar_cond) * f.at(static_cast<std::size_t>(x_t));
}

Vec p_theta_s_given_t(const Vec& f, int x_t, double s, double t, const Vec& m,
                      const NoiseSchedule& sched) {
  const PosteriorCoeffs c = posterior_coefficients(s, t, x_t, m, sched);
  const double gamma = (c.mu - c.lambda - c.mu * c.abar_cond) * f.at(static_cast<std::size_t>(x_t));
  const double w_keep = c.mu * c.abar_cond + gamma;
  const double w_noise = c.mu * (1.0 - c.abar_cond) - gamma;
  Vec p(m.size());
  for (std::size_t k = 0; k < m.size(); ++k) p[k] = (1.0 - c.mu) * f[k] + w_noise * m[k];
  p.at(static_cast<std::size_t>(x_t)) += w_keep;
  clamp_and_normalize(p);
  return p;
}

BackwardBranchProbs backward_branch_probs(const Vec& f, int x_t, double s, double t,
                                          const Vec& m, const NoiseSchedule& sched) {
  const PosteriorCoeffs c = posterior_coefficients(s, t, x_t, m, sched);
  const double gamma = (c.mu - c.lambda - c.mu * c.abar_cond) * f.at(static_cast<std::size_t>(x_t));
  Vec w = {1.0 - c.mu, c.mu * c.abar_cond + gamma, c.mu * (1.0 - c.abar_cond) - gamma};
  clamp_and_normalize(w);
  return BackwardBranchProbs{w[0], w[1], w[2]};
}

Sequence backward_step(const std::vector<Vec>& f_outs, const Sequence& x_t, double s, double t,
                       const StationaryDist& m, const NoiseSchedule& sched, Rng& rng) {
  if (f_outs.size() != x_t.size()) throw std::invalid_argument("backward_step: f/x size mismatch");
  Sequence x_s(x_t.size());
  for (std::size_t d = 0; d < x_t.size(); ++d) {
    const Vec& md = m.at(static_cast<int>(d));
    const BackwardBranchProbs b = backward_branch_probs(f_outs[d], x_t[d], s, t, md, sched);
    const double u = rng.uniform();
    if (u < b.p_pred) {
      x_s[d] = sample_categorical(f_outs[d], rng);
    } else if (u < b.p_pred + b.p_keep) {
      x_s[d] = x_t[d];
    } else {
      x_s[d] = sample_categorical(md, rng);
    }
  }
  return x_s;
}

}  // namespace usd3
