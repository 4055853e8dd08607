#include "usd3/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "usd3/backward.hpp"
#include "usd3/loss_discrete.hpp"

namespace usd3::oracle {

namespace {

double qbar_entry(double abar, const Vec& m, int i, int j) {
  return abar * (i == j ? 1.0 : 0.0) + (1.0 - abar) * m[static_cast<std::size_t>(j)];
}

}  // namespace

Vec posterior_bayes(int x_t, int x0, double s, double t, const Vec& m,
                    const NoiseSchedule& sched) {
  if (!(s < t)) throw std::invalid_argument("posterior_bayes: s < t required");
  const int K = static_cast<int>(m.size());
  const double as = alpha_bar(sched, s);
  const double at = alpha_bar(sched, t);
  const double ats = at / as;
  Vec numer(static_cast<std::size_t>(K));
  double norm = 0.0;
  for (int k = 0; k < K; ++k) {
    numer[static_cast<std::size_t>(k)] = qbar_entry(ats, m, k, x_t) * qbar_entry(as, m, x0, k);
    norm += numer[static_cast<std::size_t>(k)];
  }
  if (norm <= 0.0) throw std::runtime_error("posterior_bayes: zero normalizer");
  for (double& v : numer) v /= norm;
  return numer;
}

Vec p_theta_marginalized(const Vec& f, int x_t, double s, double t, const Vec& m,
                         const NoiseSchedule& sched) {
  const int K = static_cast<int>(m.size());
  Vec out(static_cast<std::size_t>(K), 0.0);
  for (int x0 = 0; x0 < K; ++x0) {
    const Vec q = posterior_bayes(x_t, x0, s, t, m, sched);
    for (int k = 0; k < K; ++k)
      out[static_cast<std::size_t>(k)] += f[static_cast<std::size_t>(x0)] * q[static_cast<std::size_t>(k)];
  }
  return out;
}

Vec g_sum(const Vec& f, int xd, double t, const Vec& m, const NoiseSchedule& sched) {
  const int K = static_cast<int>(m.size());
  const double abar = alpha_bar(sched, t);
  Vec g(static_cast<std::size_t>(K), 0.0);
  for (int y = 0; y < K; ++y) {
    double acc = 0.0;
    for (int x0 = 0; x0 < K; ++x0) {
      const double num = abar * (y == x0 ? 1.0 : 0.0) + (1.0 - abar) * m[static_cast<std::size_t>(y)];
      const double den = abar * (xd == x0 ? 1.0 : 0.0) + (1.0 - abar) * m[static_cast<std::size_t>(xd)];
      acc += f[static_cast<std::size_t>(x0)] * num / den;
    }
    g[static_cast<std::size_t>(y)] = acc;
  }
  return g;
}

double exact_kl(const Vec& q, const Vec& p) {
  if (q.size() != p.size()) throw std::invalid_argument("exact_kl: size mismatch");
  double kl = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    if (q[k] <= 0.0) continue;
    if (p[k] <= 0.0) return std::numeric_limits<double>::infinity();
    kl += q[k] * std::log(q[k] / p[k]);
  }
  return kl;
}

double tv_distance(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("tv_distance: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
  return 0.5 * acc;
}

Sequence gillespie_forward(const Sequence& x0, double t_end, const NoiseSchedule& sched,
                           const StationaryDist& m, Rng& rng, GillespieStats* stats) {
  if (sched.mode != TimeMode::continuous)
    throw std::invalid_argument("gillespie_forward: continuous mode only");
  if (t_end < 0.0 || t_end > sched.T) throw std::invalid_argument("gillespie_forward: bad t_end");
  Sequence x = x0;
  if (t_end == 0.0) return x;

  const int grid = 256;
  double beta_max = 0.0;
  for (int i = 0; i < grid; ++i) {
    const double tau = (i + 0.5) / grid * t_end;
    beta_max = std::max(beta_max, beta_rate(sched, tau));
  }
  double envelope = 1.1 * beta_max;
  if (envelope <= 0.0) return x;

  for (std::size_t d = 0; d < x.size(); ++d) {
    const Vec& md = m.at(static_cast<int>(d));
    double tau = 0.0;
    while (true) {
      const double u = rng.uniform();
      tau += -std::log1p(-u) / envelope;
      if (tau >= t_end) break;
      const double beta = beta_rate(sched, tau);
      if (beta > envelope) {
        if (stats) ++stats->rebuilds;
        envelope = 1.1 * beta;
      }
      if (rng.uniform() * envelope >= beta) continue;  // thinned out
      if (stats) ++stats->events;
      const int y = sample_categorical(md, rng);
      if (y != x[d]) {
        if (stats) ++stats->jumps;
        x[d] = y;
      }
    }
  }
  return x;
}

JointEnum::JointEnum(int K, int D, std::vector<double> q0) : K_(K), D_(D), q0_(std::move(q0)) {
  std::int64_t n = 1;
  for (int d = 0; d < D; ++d) {
    n *= K;
    if (n > 4096) throw std::invalid_argument("JointEnum: K^D exceeds 4096");
  }
  if (static_cast<std::int64_t>(q0_.size()) != n) throw std::invalid_argument("JointEnum: bad q0 size");
  double sum = 0.0;
  for (double v : q0_) {
    if (v < 0.0) throw std::invalid_argument("JointEnum: negative mass");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("JointEnum: q0 must sum to 1");
  for (double& v : q0_) v /= sum;
}

JointEnum JointEnum::from_dataset(const std::vector<Sequence>& data, int K, int D) {
  std::int64_t n = 1;
  for (int d = 0; d < D; ++d) n *= K;
  std::vector<double> q0(static_cast<std::size_t>(n), 0.0);
  if (data.empty()) throw std::invalid_argument("JointEnum: empty dataset");
  JointEnum tmp(K, D, std::vector<double>(static_cast<std::size_t>(n), 1.0 / static_cast<double>(n)));
  for (const Sequence& s : data) q0[static_cast<std::size_t>(tmp.pack(s))] += 1.0;
  for (double& v : q0) v /= static_cast<double>(data.size());
  return JointEnum(K, D, std::move(q0));
}

Sequence JointEnum::unpack(std::int64_t idx) const {
  Sequence x(static_cast<std::size_t>(D_));
  for (int d = 0; d < D_; ++d) {
    x[static_cast<std::size_t>(d)] = static_cast<int>(idx % K_);
    idx /= K_;
  }
  return x;
}

std::int64_t JointEnum::pack(const Sequence& x) const {
  if (static_cast<int>(x.size()) != D_) throw std::invalid_argument("JointEnum: bad length");
  std::int64_t j = 0;
  for (std::size_t d = x.size(); d-- > 0;) {
    if (x[d] < 0 || x[d] >= K_) throw std::out_of_range("JointEnum: category out of range");
    j = j * K_ + x[d];
  }
  return j;
}

std::vector<double> JointEnum::qt(double t, const StationaryDist& m,
                                  const NoiseSchedule& sched) const {
  const double abar = alpha_bar(sched, t);
  const std::int64_t n = states();
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  for (std::int64_t i = 0; i < n; ++i) {
    if (q0_[static_cast<std::size_t>(i)] == 0.0) continue;
    const Sequence x0 = unpack(i);
    for (std::int64_t z = 0; z < n; ++z) {
      const Sequence xz = unpack(z);
      double p = q0_[static_cast<std::size_t>(i)];
      for (int d = 0; d < D_; ++d)
        p *= qbar_entry(abar, m.at(d), x0[static_cast<std::size_t>(d)], xz[static_cast<std::size_t>(d)]);
      out[static_cast<std::size_t>(z)] += p;
    }
  }
  return out;
}

std::vector<Vec> JointEnum::posterior_f(const Sequence& x_t, double t, const StationaryDist& m,
                                        const NoiseSchedule& sched) const {
  const double abar = alpha_bar(sched, t);
  const std::int64_t n = states();
  std::vector<Vec> f(static_cast<std::size_t>(D_), Vec(static_cast<std::size_t>(K_), 0.0));
  double norm = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    if (q0_[static_cast<std::size_t>(i)] == 0.0) continue;
    const Sequence x0 = unpack(i);
    double w = q0_[static_cast<std::size_t>(i)];
    for (int d = 0; d < D_; ++d)
      w *= qbar_entry(abar, m.at(d), x0[static_cast<std::size_t>(d)], x_t[static_cast<std::size_t>(d)]);
    norm += w;
    for (int d = 0; d < D_; ++d)
      f[static_cast<std::size_t>(d)][static_cast<std::size_t>(x0[static_cast<std::size_t>(d)])] += w;
  }
  if (norm <= 0.0) throw std::runtime_error("posterior_f: x_t has zero forward probability");
  for (auto& row : f)
    for (double& v : row) v /= norm;
  return f;
}

std::vector<Vec> JointEnum::backward_marginal(const Sequence& x_t, double s, double t,
                                              const StationaryDist& m,
                                              const NoiseSchedule& sched) const {
  const std::vector<Vec> f = posterior_f(x_t, t, m, sched);
  std::vector<Vec> out(static_cast<std::size_t>(D_));
  for (int d = 0; d < D_; ++d)
    out[static_cast<std::size_t>(d)] = p_theta_marginalized(
        f[static_cast<std::size_t>(d)], x_t[static_cast<std::size_t>(d)], s, t, m.at(d), sched);
  return out;
}

double JointEnum::expected_single_pass(const ModelFn& f, double t, const StationaryDist& m,
                                       const NoiseSchedule& sched) const {
  const double abar = alpha_bar(sched, t);
  const std::int64_t n = states();
  double acc = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    if (q0_[static_cast<std::size_t>(i)] == 0.0) continue;
    const Sequence x0 = unpack(i);
    for (std::int64_t z = 0; z < n; ++z) {
      const Sequence xt = unpack(z);
      double w = q0_[static_cast<std::size_t>(i)];
      for (int d = 0; d < D_; ++d)
        w *= qbar_entry(abar, m.at(d), x0[static_cast<std::size_t>(d)], xt[static_cast<std::size_t>(d)]);
      if (w == 0.0) continue;
      acc += w * ctmc_vlb_single_pass(f(xt, t), x0, xt, t, m, sched);
    }
  }
  return acc;
}

double JointEnum::expected_two_pass(const ModelFn& f, double t, const AuxSampler& aux,
                                    const StationaryDist& m, const NoiseSchedule& sched) const {
  const double abar = alpha_bar(sched, t);
  const std::int64_t n = states();
  double acc = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    if (q0_[static_cast<std::size_t>(i)] == 0.0) continue;
    const Sequence x0 = unpack(i);
    for (std::int64_t zi = 0; zi < n; ++zi) {
      const Sequence xt = unpack(zi);
      double w = q0_[static_cast<std::size_t>(i)];
      for (int d = 0; d < D_; ++d)
        w *= qbar_entry(abar, m.at(d), x0[static_cast<std::size_t>(d)], xt[static_cast<std::size_t>(d)]);
      if (w == 0.0) continue;
      const double norm = aux.normalizer(xt, t, m, sched);
      for (int d = 0; d < D_; ++d) {
        for (int y = 0; y < K_; ++y) {
          if (y == xt[static_cast<std::size_t>(d)]) continue;
          Sequence z = xt;
          z[static_cast<std::size_t>(d)] = y;
          const double pz = aux.weight(d, y, xt, t, m, sched) / norm;
          if (pz == 0.0) continue;
          acc += w * pz * ctmc_vlb_two_pass(f, x0, xt, z, t, aux, m, sched);
        }
      }
    }
  }
  return acc;
}

std::vector<double> JointEnum::empirical_joint(const std::vector<Sequence>& samples) const {
  std::vector<double> out(static_cast<std::size_t>(states()), 0.0);
  if (samples.empty()) throw std::invalid_argument("empirical_joint: no samples");
  for (const Sequence& s : samples) out[static_cast<std::size_t>(pack(s))] += 1.0;
  for (double& v : out) v /= static_cast<double>(samples.size());
  return out;
}

namespace {

Vec random_simplex(int K, Rng& rng, double floor_mass) {
  Vec v(static_cast<std::size_t>(K));
  double sum = 0.0;
  for (double& x : v) {
    x = floor_mass + rng.uniform();
    sum += x;
  }
  for (double& x : v) x /= sum;
  return v;
}

struct RandomInstance {
  NoiseSchedule sched;
  Vec m;
  Vec f;
  int K = 2;
  int x_t = 0;
  int x0 = 0;
  double s = 0.0;
  double t = 1.0;
};

RandomInstance draw_instance(Rng& rng, bool force_discrete) {
  RandomInstance inst;
  inst.K = 2 + rng.uniform_int(7);
  const bool discrete = force_discrete || rng.uniform() < 0.5;
  const TimeMode mode = discrete ? TimeMode::discrete : TimeMode::continuous;
  const double T = discrete ? static_cast<double>(50 + rng.uniform_int(951)) : 1.0;
  switch (rng.uniform_int(4)) {
    case 0: inst.sched = NoiseSchedule::cosine(mode, T); break;
    case 1: inst.sched = NoiseSchedule::linear(mode, T); break;
    case 2: inst.sched = NoiseSchedule::exponential(mode, T, 0.0, 2.0 + 8.0 * rng.uniform()); break;
    default: inst.sched = NoiseSchedule::constant_rate(mode, T, 0.5 + 4.0 * rng.uniform()); break;
  }
  // Keep t away from the endpoints so the ratio estimator's alpha/(1-alpha)
  // stays small enough for absolute 1e-10 comparisons.
  if (discrete) {
    const int lo = std::max(1, static_cast<int>(0.1 * T));
    const int hi = static_cast<int>(0.95 * T);
    inst.t = static_cast<double>(lo + rng.uniform_int(hi - lo + 1));
    inst.s = static_cast<double>(rng.uniform_int(static_cast<int>(inst.t)));
  } else {
    inst.t = (0.1 + 0.85 * rng.uniform()) * T;
    inst.s = inst.t * 0.95 * rng.uniform();
  }
  inst.m = random_simplex(inst.K, rng, 0.05);
  inst.f = random_simplex(inst.K, rng, 0.0);
  inst.x_t = rng.uniform_int(inst.K);
  inst.x0 = rng.uniform_int(inst.K);
  return inst;
}

double max_abs_diff(const Vec& a, const Vec& b) {
  double mx = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mx = std::max(mx, std::abs(a[i] - b[i]));
  return mx;
}

}  // namespace

std::vector<VerifyCheck> run_verify_suite(std::uint64_t seed) {
  Rng rng(seed);
  VerifyCheck posterior{"posterior_q vs bayes", 0.0, 1e-10, false};
  VerifyCheck backward{"p_theta vs marginalized", 0.0, 1e-10, false};
  VerifyCheck diff{"delta_p vs subtraction", 0.0, 1e-10, false};
  VerifyCheck ratio{"g_theta vs ratio sum", 0.0, 1e-10, false};
  VerifyCheck vlb{"vlb_term vs exact kl", 0.0, 1e-12, false};

  const int iters = 1000;
  for (int it = 0; it < iters; ++it) {
    const RandomInstance inst = draw_instance(rng, false);

    const Vec q_engine = posterior_q(inst.x_t, inst.x0, inst.s, inst.t, inst.m, inst.sched);
    const Vec q_oracle = posterior_bayes(inst.x_t, inst.x0, inst.s, inst.t, inst.m, inst.sched);
    posterior.max_dev = std::max(posterior.max_dev, max_abs_diff(q_engine, q_oracle));

    const Vec p_engine = p_theta_s_given_t(inst.f, inst.x_t, inst.s, inst.t, inst.m, inst.sched);
    const Vec p_oracle = p_theta_marginalized(inst.f, inst.x_t, inst.s, inst.t, inst.m, inst.sched);
    backward.max_dev = std::max(backward.max_dev, max_abs_diff(p_engine, p_oracle));

    const Vec dp = delta_p(inst.f, inst.x_t, inst.x0, inst.s, inst.t, inst.m, inst.sched);
    Vec dp_oracle(q_engine.size());
    for (std::size_t k = 0; k < dp_oracle.size(); ++k) dp_oracle[k] = p_engine[k] - q_engine[k];
    diff.max_dev = std::max(diff.max_dev, max_abs_diff(dp, dp_oracle));

    const Vec g_engine = g_theta(inst.f, inst.x_t, inst.t, inst.m, inst.sched);
    const Vec g_oracle = g_sum(inst.f, inst.x_t, inst.t, inst.m, inst.sched);
    ratio.max_dev = std::max(ratio.max_dev, max_abs_diff(g_engine, g_oracle));

    // The per-step VLB term needs discrete mode with s = t-1.
    const RandomInstance di = draw_instance(rng, true);
    const double td = std::max(2.0, di.t);
    const std::vector<Vec> fs{di.f};
    const Sequence xts{di.x_t};
    const Sequence x0s{di.x0};
    const StationaryDist md = StationaryDist::shared(di.m);
    const double v_engine = vlb_term(fs, xts, x0s, td, md, di.sched);
    const Vec qd = posterior_q(di.x_t, di.x0, td - 1.0, td, di.m, di.sched);
    const Vec pd = p_theta_s_given_t(di.f, di.x_t, td - 1.0, td, di.m, di.sched);
    vlb.max_dev = std::max(vlb.max_dev, std::abs(v_engine - exact_kl(qd, pd)));
  }

  std::vector<VerifyCheck> out{posterior, backward, diff, ratio, vlb};
  for (VerifyCheck& c : out) c.pass = c.max_dev < c.tol;
  return out;
}

}  // namespace usd3::oracle
