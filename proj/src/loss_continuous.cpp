#include "usd3/loss_continuous.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace usd3 {

namespace {

void check_continuous(const NoiseSchedule& sched) {
  if (sched.mode != TimeMode::continuous)
    throw std::domain_error("ctmc loss: continuous mode only");
}

int single_diff_element(const Sequence& x, const Sequence& z) {
  if (x.size() != z.size()) throw std::invalid_argument("aux: length mismatch");
  int diff = -1;
  for (std::size_t d = 0; d < x.size(); ++d) {
    if (x[d] == z[d]) continue;
    if (diff >= 0) throw std::invalid_argument("aux: sequences differ at more than one element");
    diff = static_cast<int>(d);
  }
  if (diff < 0) throw std::invalid_argument("aux: sequences are identical");
  return diff;
}

}  // namespace

double AuxSampler::weight(int d, int y, const Sequence& x, double t, const StationaryDist& m,
                          const NoiseSchedule& sched) const {
  if (y == x.at(static_cast<std::size_t>(d))) return 0.0;
  switch (kind) {
    case AuxKind::uniform:
      return 1.0;
    case AuxKind::forward_rate:
      return beta_rate(sched, t) * m.at(d).at(static_cast<std::size_t>(y));
  }
  return 0.0;
}

double AuxSampler::normalizer(const Sequence& x, double t, const StationaryDist& m,
                              const NoiseSchedule& sched) const {
  double total = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const int K = static_cast<int>(m.at(static_cast<int>(d)).size());
    for (int y = 0; y < K; ++y)
      total += weight(static_cast<int>(d), y, x, t, m, sched);
  }
  if (total <= 0.0) throw std::domain_error("aux: zero proposal mass");
  return total;
}

Vec g_theta(const Vec& f_d, int xd, double t, const Vec& m, const NoiseSchedule& sched) {
  const double abar = alpha_bar(sched, t);
  if (!(abar < 1.0)) throw std::domain_error("g_theta: alpha_bar must be < 1");
  const double mx = m.at(static_cast<std::size_t>(xd));
  if (mx <= 0.0) throw std::domain_error("g_theta: <x, m> = 0");
  const double fx = f_d.at(static_cast<std::size_t>(xd));
  const double coef = 1.0 - abar * fx / (abar + (1.0 - abar) * mx);
  const double rho = abar / (1.0 - abar);
  Vec g(f_d.size());
  for (std::size_t y = 0; y < f_d.size(); ++y) g[y] = (coef * m[y] + rho * f_d[y]) / mx;
  g[static_cast<std::size_t>(xd)] = 1.0;
  return g;
}

double m_st(const Sequence& z, const Sequence& x0, double t, const AuxSampler& aux,
            const StationaryDist& m, const NoiseSchedule& sched) {
  check_continuous(sched);
  const double abar = alpha_bar(sched, t);
  double total = 0.0;
  Sequence probe = z;
  for (std::size_t d = 0; d < z.size(); ++d) {
    const Vec& md = m.at(static_cast<int>(d));
    const Vec q0 = marginal_t_given_0(x0[d], abar, md);
    const double qz = q0.at(static_cast<std::size_t>(z[d]));
    for (int y = 0; y < static_cast<int>(md.size()); ++y) {
      if (y == z[d]) continue;
      probe[d] = y;  // the sequence y o z^{\d}
      const double s_zy = aux.weight(static_cast<int>(d), z[d], probe, t, m, sched);
      total += (q0[static_cast<std::size_t>(y)] / qz) * s_zy /
               aux.normalizer(probe, t, m, sched);
    }
    probe[d] = z[d];
  }
  return total;
}

double ctmc_vlb_single_pass(const std::vector<Vec>& f_at_x, const Sequence& x0,
                            const Sequence& x_t, double t, const StationaryDist& m,
                            const NoiseSchedule& sched) {
  check_continuous(sched);
  const double abar = alpha_bar(sched, t);
  const double beta = beta_rate(sched, t, sched.clip_beta);
  double loss = 0.0;
  for (std::size_t d = 0; d < x_t.size(); ++d) {
    const Vec& md = m.at(static_cast<int>(d));
    const int xd = x_t[d];
    const double mx = md.at(static_cast<std::size_t>(xd));
    const Vec g = g_theta(f_at_x[d], xd, t, md, sched);
    const Vec q0 = marginal_t_given_0(x0[d], abar, md);
    const double qx = q0.at(static_cast<std::size_t>(xd));
    if (qx <= 0.0) throw std::domain_error("single_pass: zero forward likelihood at x_t");
    // column rate r(x^d | y) = beta * (m[x^d] - delta_{y,x^d});
    // at y = x^d: g = 1, log g = 0, contribution beta*(mx - 1).
    double acc = beta * (mx - 1.0);
    for (std::size_t y = 0; y < md.size(); ++y) {
      if (static_cast<int>(y) == xd) continue;
      const double lg = g[y] > 0.0 ? std::log(g[y]) : -std::numeric_limits<double>::infinity();
      acc += beta * mx * (g[y] - q0[y] * lg / qx);
    }
    loss += acc;
  }
  return sched.T * loss;
}

double ctmc_vlb_single_pass_grad(const std::vector<Vec>& f_at_x, const Sequence& x0,
                                 const Sequence& x_t, double t, const StationaryDist& m,
                                 const NoiseSchedule& sched, std::vector<Vec>& dldf) {
  check_continuous(sched);
  const double abar = alpha_bar(sched, t);
  const double beta = beta_rate(sched, t, sched.clip_beta);
  const double rho = abar / (1.0 - abar);
  double loss = 0.0;
  for (std::size_t d = 0; d < x_t.size(); ++d) {
    const Vec& md = m.at(static_cast<int>(d));
    const int xd = x_t[d];
    const std::size_t xi = static_cast<std::size_t>(xd);
    const double mx = md[xi];
    const double c_a = abar / (abar + (1.0 - abar) * mx);
    const Vec g = g_theta(f_at_x[d], xd, t, md, sched);
    const Vec q0 = marginal_t_given_0(x0[d], abar, md);
    const double qx = q0[xi];
    if (qx <= 0.0) throw std::domain_error("single_pass: zero forward likelihood at x_t");
    double acc = beta * (mx - 1.0);
    for (std::size_t y = 0; y < md.size(); ++y) {
      if (y == xi) continue;
      const double lg = g[y] > 0.0 ? std::log(g[y]) : -std::numeric_limits<double>::infinity();
      acc += beta * mx * (g[y] - q0[y] * lg / qx);
      // dL/dg[y], then through g[y] = (coef*m[y] + rho*f[y])/mx with
      // coef = 1 - c_a*f[xd].
      const double dg = sched.T * beta * mx * (1.0 - q0[y] / (qx * g[y]));
      dldf[d][y] += dg * rho / mx;
      dldf[d][xi] += dg * (-c_a * md[y] / mx);
    }
    loss += acc;
  }
  return sched.T * loss;
}

double ctmc_vlb_two_pass(const std::vector<Vec>& f_at_x, const std::vector<Vec>& f_at_z,
                         const Sequence& x0, const Sequence& x_t, const Sequence& z_t, double t,
                         const AuxSampler& aux, const StationaryDist& m,
                         const NoiseSchedule& sched) {
  check_continuous(sched);
  single_diff_element(x_t, z_t);
  const double abar = alpha_bar(sched, t);
  const double beta = beta_rate(sched, t, sched.clip_beta);
  const double mst = m_st(z_t, x0, t, aux, m, sched);

  // First pass: sum_d r(x^d | .)^T g(. | x_t).
  double term1 = 0.0;
  for (std::size_t d = 0; d < x_t.size(); ++d) {
    const Vec& md = m.at(static_cast<int>(d));
    const int xd = x_t[d];
    const double mx = md.at(static_cast<std::size_t>(xd));
    const Vec g = g_theta(f_at_x[d], xd, t, md, sched);
    double acc = beta * (mx - 1.0);
    for (std::size_t y = 0; y < md.size(); ++y) {
      if (static_cast<int>(y) == xd) continue;
      acc += beta * mx * g[y];
    }
    term1 += acc;
  }

  // Second pass at z: sum_d 1^T ( q_{t|0}(.|x0^d) o r(z^d|.) o log g(.|z) ) / q(z^d|x0^d).
  double term2 = 0.0;
  for (std::size_t d = 0; d < z_t.size(); ++d) {
    const Vec& md = m.at(static_cast<int>(d));
    const int zd = z_t[d];
    const double mz = md.at(static_cast<std::size_t>(zd));
    const Vec g = g_theta(f_at_z[d], zd, t, md, sched);
    const Vec q0 = marginal_t_given_0(x0[d], abar, md);
    const double qz = q0.at(static_cast<std::size_t>(zd));
    if (qz <= 0.0) throw std::domain_error("two_pass: zero forward likelihood at z_t");
    double acc = 0.0;
    for (std::size_t y = 0; y < md.size(); ++y) {
      if (static_cast<int>(y) == zd) continue;  // log g at z^d is 0
      const double lg = g[y] > 0.0 ? std::log(g[y]) : -std::numeric_limits<double>::infinity();
      acc += q0[y] * beta * mz * lg / qz;
    }
    term2 += acc;
  }
  return sched.T * (term1 - term2 / mst);
}

double ctmc_vlb_two_pass(const ModelFn& f, const Sequence& x0, const Sequence& x_t,
                         const Sequence& z_t, double t, const AuxSampler& aux,
                         const StationaryDist& m, const NoiseSchedule& sched) {
  return ctmc_vlb_two_pass(f(x_t, t), f(z_t, t), x0, x_t, z_t, t, aux, m, sched);
}

double ctmc_vlb_two_pass_grad(const std::vector<Vec>& f_at_x, const std::vector<Vec>& f_at_z,
                              const Sequence& x0, const Sequence& x_t, const Sequence& z_t,
                              double t, const AuxSampler& aux, const StationaryDist& m,
                              const NoiseSchedule& sched, std::vector<Vec>& dldf_x,
                              std::vector<Vec>& dldf_z) {
  check_continuous(sched);
  single_diff_element(x_t, z_t);
  const double abar = alpha_bar(sched, t);
  const double beta = beta_rate(sched, t, sched.clip_beta);
  const double rho = abar / (1.0 - abar);
  const double mst = m_st(z_t, x0, t, aux, m, sched);

  double term1 = 0.0;
  for (std::size_t d = 0; d < x_t.size(); ++d) {
    const Vec& md = m.at(static_cast<int>(d));
    const int xd = x_t[d];
    const std::size_t xi = static_cast<std::size_t>(xd);
    const double mx = md[xi];
    const double c_a = abar / (abar + (1.0 - abar) * mx);
    const Vec g = g_theta(f_at_x[d], xd, t, md, sched);
    double acc = beta * (mx - 1.0);
    for (std::size_t y = 0; y < md.size(); ++y) {
      if (y == xi) continue;
      acc += beta * mx * g[y];
      const double dg = sched.T * beta * mx;
      dldf_x[d][y] += dg * rho / mx;
      dldf_x[d][xi] += dg * (-c_a * md[y] / mx);
    }
    term1 += acc;
  }

  double term2 = 0.0;
  for (std::size_t d = 0; d < z_t.size(); ++d) {
    const Vec& md = m.at(static_cast<int>(d));
    const int zd = z_t[d];
    const std::size_t zi = static_cast<std::size_t>(zd);
    const double mz = md[zi];
    const double c_a = abar / (abar + (1.0 - abar) * mz);
    const Vec g = g_theta(f_at_z[d], zd, t, md, sched);
    const Vec q0 = marginal_t_given_0(x0[d], abar, md);
    const double qz = q0[zi];
    if (qz <= 0.0) throw std::domain_error("two_pass: zero forward likelihood at z_t");
    double acc = 0.0;
    for (std::size_t y = 0; y < md.size(); ++y) {
      if (y == zi) continue;
      const double lg = g[y] > 0.0 ? std::log(g[y]) : -std::numeric_limits<double>::infinity();
      acc += q0[y] * beta * mz * lg / qz;
      const double dg = -sched.T / mst * q0[y] * beta * mz / (qz * g[y]);
      dldf_z[d][y] += dg * rho / mz;
      dldf_z[d][zi] += dg * (-c_a * md[y] / mz);
    }
    term2 += acc;
  }
  return sched.T * (term1 - term2 / mst);
}

Sequence sample_auxiliary(const Sequence& x_t, const AuxSampler& aux, double t,
                          const StationaryDist& m, const NoiseSchedule& sched, Rng& rng) {
  const double total = aux.normalizer(x_t, t, m, sched);
  const double u = rng.uniform() * total;
  double cum = 0.0;
  Sequence z = x_t;
  int last_d = -1, last_y = -1;
  for (std::size_t d = 0; d < x_t.size(); ++d) {
    const int K = static_cast<int>(m.at(static_cast<int>(d)).size());
    for (int y = 0; y < K; ++y) {
      const double w = aux.weight(static_cast<int>(d), y, x_t, t, m, sched);
      if (w <= 0.0) continue;
      last_d = static_cast<int>(d);
      last_y = y;
      cum += w;
      if (cum > u) {
        z[d] = y;
        return z;
      }
    }
  }
  // Rounding pushed u onto the upper edge; assign the final candidate.
  z.at(static_cast<std::size_t>(last_d)) = last_y;
  return z;
}

std::string to_string(AuxKind kind) {
  return kind == AuxKind::uniform ? "uniform" : "forward_rate";
}

AuxKind aux_kind_from_string(const std::string& s) {
  if (s == "uniform") return AuxKind::uniform;
  if (s == "forward_rate" || s == "forward-rate") return AuxKind::forward_rate;
  throw std::invalid_argument("unknown aux sampler kind: " + s);
}

}  // namespace usd3
