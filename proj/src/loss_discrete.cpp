#include "usd3/loss_discrete.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "usd3/backward.hpp"
#include "usd3/loss_continuous.hpp"

namespace usd3 {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void resize_like(std::vector<Vec>& g, const std::vector<Vec>& f) {
  g.resize(f.size());
  for (std::size_t d = 0; d < f.size(); ++d) g[d].assign(f[d].size(), 0.0);
}

// KL(q||p) over K categories, 0*log(0/x) = 0, q>0 with p=0 gives +inf.
double kl_categories(const Vec& q, const Vec& p) {
  double kl = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    if (q[k] <= 0.0) continue;
    if (p[k] <= 0.0) return kInf;
    kl += q[k] * std::log(q[k] / p[k]);
  }
  return kl;
}

// The inner L2/delta-p vector (f - e_{x0}) + phi <f - e_{x0}, x_t>(e_{x_t} - m).
Vec difference_core(const Vec& f, int x_t, int x0, double phi, const Vec& m) {
  Vec v(f.size());
  const double h_xt = f[static_cast<std::size_t>(x_t)] - (x_t == x0 ? 1.0 : 0.0);
  for (std::size_t k = 0; k < f.size(); ++k) {
    v[k] = f[k] - phi * h_xt * m[k];
  }
  v[static_cast<std::size_t>(x0)] -= 1.0;
  v[static_cast<std::size_t>(x_t)] += phi * h_xt;
  return v;
}

}  // namespace

double resolved_ce_weight(const LossConfig& cfg) {
  if (cfg.ce_weight >= 0.0) return cfg.ce_weight;
  switch (cfg.mode) {
    case LossMode::usd3: return 0.001;
    case LossMode::usd3_star: return 1.0;
    case LossMode::ce_only: return 1.0;
    case LossMode::vlb_only: return 0.0;
  }
  return 0.0;
}

double vlb_term(const std::vector<Vec>& f_outs, const Sequence& x_t, const Sequence& x0,
                double t, const StationaryDist& m, const NoiseSchedule& sched) {
  if (sched.mode != TimeMode::discrete) throw std::domain_error("vlb_term: discrete mode only");
  if (t < 1.0) throw std::domain_error("vlb_term: t >= 1 required");
  double loss = 0.0;
  for (std::size_t d = 0; d < f_outs.size(); ++d) {
    if (t == 1.0) {
      const double fx0 = f_outs[d][static_cast<std::size_t>(x0[d])];
      loss += fx0 > 0.0 ? -std::log(fx0) : kInf;
      continue;
    }
    const Vec& md = m.at(static_cast<int>(d));
    const Vec q = posterior_q(x_t[d], x0[d], t - 1.0, t, md, sched);
    const Vec p = p_theta_s_given_t(f_outs[d], x_t[d], t - 1.0, t, md, sched);
    loss += kl_categories(q, p);
  }
  return loss;
}

double vlb_term_grad(const std::vector<Vec>& f_outs, const Sequence& x_t, const Sequence& x0,
                     double t, const StationaryDist& m, const NoiseSchedule& sched,
                     std::vector<Vec>& dldf) {
  if (sched.mode != TimeMode::discrete) throw std::domain_error("vlb_term: discrete mode only");
  double loss = 0.0;
  for (std::size_t d = 0; d < f_outs.size(); ++d) {
    if (t == 1.0) {
      const std::size_t i = static_cast<std::size_t>(x0[d]);
      const double fx0 = f_outs[d][i];
      loss += fx0 > 0.0 ? -std::log(fx0) : kInf;
      dldf[d][i] += fx0 > 0.0 ? -1.0 / fx0 : -kInf;
      continue;
    }
    const Vec& md = m.at(static_cast<int>(d));
    const std::size_t xt = static_cast<std::size_t>(x_t[d]);
    const PosteriorCoeffs c = posterior_coefficients(t - 1.0, t, x_t[d], md, sched);
    const double c_gamma = c.mu - c.lambda - c.mu * c.abar_cond;
    const Vec q = posterior_q(x_t[d], x0[d], t - 1.0, t, md, sched);
    const Vec p = p_theta_s_given_t(f_outs[d], x_t[d], t - 1.0, t, md, sched);
    // r = q/p restricted to q's support. Each f_k feeds p_k directly, f_{x_t}
    // feeds every p_k through gamma, and every f_k feeds the normalizer
    // Z = (1-mu)*sum(f) + mu, which contributes +(1-mu) to all coordinates.
    double r_xt = 0.0, r_dot_m = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) {
      if (q[k] <= 0.0) continue;
      if (p[k] <= 0.0) {
        loss = kInf;
        continue;
      }
      const double r = q[k] / p[k];
      loss += q[k] * std::log(r);
      dldf[d][k] += -(1.0 - c.mu) * r;
      if (k == xt) r_xt = r;
      r_dot_m += r * md[k];
    }
    dldf[d][xt] += -c_gamma * (r_xt - r_dot_m);
    for (std::size_t k = 0; k < q.size(); ++k) dldf[d][k] += 1.0 - c.mu;
  }
  return loss;
}

double ce_loss(const std::vector<Vec>& f_outs, const Sequence& x0) {
  double loss = 0.0;
  for (std::size_t d = 0; d < f_outs.size(); ++d) {
    const double fx0 = f_outs[d].at(static_cast<std::size_t>(x0[d]));
    loss += fx0 > 0.0 ? -std::log(fx0) : kInf;
  }
  return loss;
}

double ce_loss_grad(const std::vector<Vec>& f_outs, const Sequence& x0, double weight,
                    std::vector<Vec>& dldf) {
  double loss = 0.0;
  for (std::size_t d = 0; d < f_outs.size(); ++d) {
    const std::size_t i = static_cast<std::size_t>(x0[d]);
    const double fx0 = f_outs[d][i];
    loss += fx0 > 0.0 ? -std::log(fx0) : kInf;
    dldf[d][i] += fx0 > 0.0 ? -weight / fx0 : -kInf;
  }
  return loss;
}

Vec delta_p(const Vec& f, int x_t, int x0, double s, double t, const Vec& m,
            const NoiseSchedule& sched) {
  const PosteriorCoeffs c = posterior_coefficients(s, t, x_t, m, sched);
  Vec v = difference_core(f, x_t, x0, c.phi, m);
  for (double& e : v) e *= 1.0 - c.mu;
  return v;
}

double kl_approx(const Vec& f, int x_t, int x0, double s, double t, const Vec& m,
                 const NoiseSchedule& sched) {
  const Vec dp = delta_p(f, x_t, x0, s, t, m, sched);
  const Vec q = posterior_q(x_t, x0, s, t, m, sched);
  double acc = 0.0;
  for (std::size_t k = 0; k < dp.size(); ++k) {
    if (dp[k] == 0.0) continue;
    if (q[k] <= 0.0) return kInf;
    acc += dp[k] * dp[k] / q[k];
  }
  return acc;
}

double l2_simplified(const Vec& f, int x_t, int x0, double s, double t, const Vec& m,
                     const NoiseSchedule& sched, bool phi_clip) {
  const PosteriorCoeffs c = posterior_coefficients(s, t, x_t, m, sched);
  const double phi = phi_clip ? std::min(1.0, c.phi) : c.phi;
  const Vec v = difference_core(f, x_t, x0, phi, m);
  return inner(v, v);
}

double l2_simplified_grad(const Vec& f, int x_t, int x0, double s, double t, const Vec& m,
                          const NoiseSchedule& sched, bool phi_clip, Vec& dldf_elem) {
  const PosteriorCoeffs c = posterior_coefficients(s, t, x_t, m, sched);
  const double phi = phi_clip ? std::min(1.0, c.phi) : c.phi;
  const Vec v = difference_core(f, x_t, x0, phi, m);
  for (std::size_t k = 0; k < v.size(); ++k) dldf_elem[k] += 2.0 * v[k];
  dldf_elem[static_cast<std::size_t>(x_t)] +=
      2.0 * phi * (v[static_cast<std::size_t>(x_t)] - inner(v, m));
  return inner(v, v);
}

double l2_seq(const std::vector<Vec>& f_outs, const Sequence& x_t, const Sequence& x0,
              double s, double t, const StationaryDist& m, const NoiseSchedule& sched,
              bool phi_clip) {
  double loss = 0.0;
  for (std::size_t d = 0; d < f_outs.size(); ++d)
    loss += l2_simplified(f_outs[d], x_t[d], x0[d], s, t, m.at(static_cast<int>(d)), sched, phi_clip);
  return loss;
}

namespace {

double l2_s_for(const LossConfig& cfg, const NoiseSchedule& sched, double t) {
  return sched.mode == TimeMode::discrete ? t - 1.0 : cfg.s_ratio * t;
}

}  // namespace

LossBreakdown combined_loss(const LossConfig& cfg, const std::vector<Vec>& f_outs,
                            const Sequence& x_t, const Sequence& x0, double t,
                            const StationaryDist& m, const NoiseSchedule& sched) {
  LossBreakdown bd;
  bd.ce_weight = resolved_ce_weight(cfg);
  switch (cfg.mode) {
    case LossMode::usd3:
    case LossMode::vlb_only:
      bd.vlb = sched.mode == TimeMode::discrete
                   ? vlb_term(f_outs, x_t, x0, t, m, sched)
                   : ctmc_vlb_single_pass(f_outs, x0, x_t, t, m, sched);
      bd.total = bd.vlb;
      break;
    case LossMode::usd3_star:
      bd.l2 = l2_seq(f_outs, x_t, x0, l2_s_for(cfg, sched, t), t, m, sched, cfg.phi_clip);
      bd.total = bd.l2;
      break;
    case LossMode::ce_only:
      break;
  }
  if (cfg.mode != LossMode::vlb_only) {
    bd.ce = ce_loss(f_outs, x0);
    bd.total += bd.ce_weight * bd.ce;
  }
  return bd;
}

LossBreakdown combined_loss_grad(const LossConfig& cfg, const std::vector<Vec>& f_outs,
                                 const Sequence& x_t, const Sequence& x0, double t,
                                 const StationaryDist& m, const NoiseSchedule& sched,
                                 std::vector<Vec>& dldf) {
  resize_like(dldf, f_outs);
  LossBreakdown bd;
  bd.ce_weight = resolved_ce_weight(cfg);
  switch (cfg.mode) {
    case LossMode::usd3:
    case LossMode::vlb_only:
      bd.vlb = sched.mode == TimeMode::discrete
                   ? vlb_term_grad(f_outs, x_t, x0, t, m, sched, dldf)
                   : ctmc_vlb_single_pass_grad(f_outs, x0, x_t, t, m, sched, dldf);
      bd.total = bd.vlb;
      break;
    case LossMode::usd3_star: {
      const double s = l2_s_for(cfg, sched, t);
      for (std::size_t d = 0; d < f_outs.size(); ++d)
        bd.l2 += l2_simplified_grad(f_outs[d], x_t[d], x0[d], s, t,
                                    m.at(static_cast<int>(d)), sched, cfg.phi_clip, dldf[d]);
      bd.total = bd.l2;
      break;
    }
    case LossMode::ce_only:
      break;
  }
  if (cfg.mode != LossMode::vlb_only) {
    bd.ce = ce_loss_grad(f_outs, x0, bd.ce_weight, dldf);
    bd.total += bd.ce_weight * bd.ce;
  }
  return bd;
}

std::string to_string(LossMode mode) {
  switch (mode) {
    case LossMode::usd3: return "usd3";
    case LossMode::usd3_star: return "usd3_star";
    case LossMode::ce_only: return "ce_only";
    case LossMode::vlb_only: return "vlb_only";
  }
  return "?";
}

LossMode loss_mode_from_string(const std::string& s) {
  if (s == "usd3") return LossMode::usd3;
  if (s == "usd3_star") return LossMode::usd3_star;
  if (s == "ce_only") return LossMode::ce_only;
  if (s == "vlb_only") return LossMode::vlb_only;
  throw std::invalid_argument("unknown loss mode: " + s);
}

}  // namespace usd3
