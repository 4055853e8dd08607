#include "usd3/forward.hpp"

#include <stdexcept>

namespace usd3 {

StationaryDist StationaryDist::uniform(int K) {
  if (K < 2) throw std::invalid_argument("StationaryDist: K < 2");
  StationaryDist d;
  d.per_element.push_back(Vec(static_cast<std::size_t>(K), 1.0 / K));
  return d;
}

StationaryDist StationaryDist::shared(Vec m) {
  if (!is_prob_vector(m)) throw std::invalid_argument("StationaryDist: not a distribution");
  StationaryDist d;
  d.per_element.push_back(std::move(m));
  return d;
}

std::vector<Vec> transition_matrix(double abar, const Vec& m) {
  if (!(abar >= 0.0 && abar <= 1.0)) throw std::invalid_argument("transition_matrix: abar outside [0,1]");
  const std::size_t K = m.size();
  std::vector<Vec> Q(K, Vec(K, 0.0));
  for (std::size_t i = 0; i < K; ++i) {
    for (std::size_t j = 0; j < K; ++j) Q[i][j] = (1.0 - abar) * m[j];
    Q[i][i] += abar;
  }
  return Q;
}

Vec marginal_t_given_0(int x0, double abar_t, const Vec& m) {
  Vec p(m.size());
  for (std::size_t k = 0; k < m.size(); ++k) p[k] = (1.0 - abar_t) * m[k];
  p.at(static_cast<std::size_t>(x0)) += abar_t;
  return p;
}

Sequence sample_forward(const Sequence& x0, double t, const NoiseSchedule& sched,
                        const StationaryDist& m, Rng& rng) {
  const double abar = alpha_bar(sched, t);
  Sequence x(x0.size());
  for (std::size_t d = 0; d < x0.size(); ++d) {
    if (rng.uniform() < abar) {
      x[d] = x0[d];
    } else {
      x[d] = sample_categorical(m.at(static_cast<int>(d)), rng);
    }
  }
  return x;
}

PosteriorCoeffs posterior_coefficients_from_abars(double abar_s, double abar_t, double m_dot_xt) {
  PosteriorCoeffs c;
  c.abar_cond = abar_s > 0.0 ? abar_t / abar_s : 0.0;
  if (abar_s >= 1.0) return c;  // s = 0: lambda = mu = phi = 0 exactly
  const double denom = abar_t + (1.0 - abar_t) * m_dot_xt;
  c.lambda = (1.0 - abar_s) * (1.0 - c.abar_cond) * m_dot_xt / denom;
  c.mu = (1.0 - abar_s) / (1.0 - abar_t);
  c.phi = (1.0 - abar_s) * c.abar_cond / denom;
  return c;
}

PosteriorCoeffs posterior_coefficients(double s, double t, int x_t, const Vec& m,
                                       const NoiseSchedule& sched) {
  if (!(s >= 0.0 && s < t)) throw std::domain_error("posterior_coefficients: requires 0 <= s < t");
  const double abar_s = s == 0.0 ? 1.0 : alpha_bar(sched, s);
  const double abar_t = alpha_bar(sched, t);
  return posterior_coefficients_from_abars(abar_s, abar_t, m.at(static_cast<std::size_t>(x_t)));
}

Vec posterior_q(int x_t, int x0, double s, double t, const Vec& m, const NoiseSchedule& sched) {
  const PosteriorCoeffs c = posterior_coefficients(s, t, x_t, m, sched);
  const std::size_t K = m.size();
  Vec q(K, 0.0);
  if (x_t == x0) {
    for (std::size_t k = 0; k < K; ++k) q[k] = c.lambda * m[k];
    q.at(static_cast<std::size_t>(x_t)) += 1.0 - c.lambda;
  } else {
    const double noise = c.mu * (1.0 - c.abar_cond);
    for (std::size_t k = 0; k < K; ++k) q[k] = noise * m[k];
    q.at(static_cast<std::size_t>(x0)) += 1.0 - c.mu;
    q.at(static_cast<std::size_t>(x_t)) += c.mu * c.abar_cond;
  }
  clamp_and_normalize(q);
  return q;
}

Vec forward_rate_row(int x, double t, const Vec& m, const NoiseSchedule& sched) {
  const double beta = beta_rate(sched, t);
  Vec r(m.size());
  for (std::size_t k = 0; k < m.size(); ++k) r[k] = beta * m[k];
  r.at(static_cast<std::size_t>(x)) -= beta;
  return r;
}

Vec forward_rate_col(int x, double t, const Vec& m, const NoiseSchedule& sched) {
  const double beta = beta_rate(sched, t);
  const double mx = m.at(static_cast<std::size_t>(x));
  Vec r(m.size(), beta * mx);
  r.at(static_cast<std::size_t>(x)) -= beta;
  return r;
}

}  // namespace usd3
