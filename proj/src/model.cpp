#include "usd3/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace usd3 {

namespace {

// Parameter layout offsets for tiny_net, in theta order:
// emb[K][E], pos[D][E], wt[E][2F], W1[H][E], b1[H], W2[K][H], b2[K].
struct NetLayout {
  std::size_t emb, pos, wt, w1, b1, w2, b2, total;
  int K, D, E, H, F;

  explicit NetLayout(const ModelDims& d)
      : K(d.K), D(d.D), E(d.embed), H(d.hidden), F(d.fourier) {
    emb = 0;
    pos = emb + static_cast<std::size_t>(K) * E;
    wt = pos + static_cast<std::size_t>(D) * E;
    w1 = wt + static_cast<std::size_t>(E) * 2 * F;
    b1 = w1 + static_cast<std::size_t>(H) * E;
    w2 = b1 + static_cast<std::size_t>(H);
    b2 = w2 + static_cast<std::size_t>(K) * H;
    total = b2 + static_cast<std::size_t>(K);
  }
};

void softmax(const double* logits, int K, Vec& out) {
  double mx = logits[0];
  for (int k = 1; k < K; ++k) mx = std::max(mx, logits[k]);
  double sum = 0.0;
  for (int k = 0; k < K; ++k) {
    out[static_cast<std::size_t>(k)] = std::exp(logits[k] - mx);
    sum += out[static_cast<std::size_t>(k)];
  }
  for (int k = 0; k < K; ++k) out[static_cast<std::size_t>(k)] /= sum;
}

// dL/dlogits = f o (dL/df - <f, dL/df>).
void softmax_vjp(const Vec& f, const Vec& dldf, Vec& dlogits) {
  const double dot = inner(f, dldf);
  for (std::size_t k = 0; k < f.size(); ++k) dlogits[k] = f[k] * (dldf[k] - dot);
}

void time_features(const ModelDims& dims, double t, Vec& tau) {
  const double base = 2.0 * std::numbers::pi * t / dims.T;
  for (int i = 0; i < dims.fourier; ++i) {
    const double w = base * static_cast<double>(1 << i);
    tau[static_cast<std::size_t>(2 * i)] = std::sin(w);
    tau[static_cast<std::size_t>(2 * i + 1)] = std::cos(w);
  }
}

struct NetActivations {
  Vec tau;                 // 2F
  std::vector<Vec> u;      // D x E  (input to first dense layer)
  std::vector<Vec> z;      // D x H  (tanh hidden)
};

void net_forward(const ModelParams& p, const std::vector<double>& th, const Sequence& x,
                 double t, NetActivations& act, std::vector<Vec>& f) {
  const NetLayout L(p.dims);
  act.tau.assign(static_cast<std::size_t>(2 * L.F), 0.0);
  time_features(p.dims, t, act.tau);

  // te = wt * tau, shared across elements.
  Vec te(static_cast<std::size_t>(L.E), 0.0);
  for (int e = 0; e < L.E; ++e) {
    double s = 0.0;
    for (int i = 0; i < 2 * L.F; ++i) s += th[L.wt + static_cast<std::size_t>(e) * 2 * L.F + i] * act.tau[static_cast<std::size_t>(i)];
    te[static_cast<std::size_t>(e)] = s;
  }

  // h_d = emb[x_d] + pos[d]; context c = mean_d h_d.
  std::vector<Vec> h(x.size(), Vec(static_cast<std::size_t>(L.E)));
  Vec c(static_cast<std::size_t>(L.E), 0.0);
  for (std::size_t d = 0; d < x.size(); ++d) {
    const std::size_t eo = L.emb + static_cast<std::size_t>(x[d]) * L.E;
    const std::size_t po = L.pos + d * static_cast<std::size_t>(L.E);
    for (int e = 0; e < L.E; ++e) {
      h[d][static_cast<std::size_t>(e)] = th[eo + static_cast<std::size_t>(e)] + th[po + static_cast<std::size_t>(e)];
      c[static_cast<std::size_t>(e)] += h[d][static_cast<std::size_t>(e)];
    }
  }
  for (int e = 0; e < L.E; ++e) c[static_cast<std::size_t>(e)] /= static_cast<double>(x.size());

  act.u.assign(x.size(), Vec(static_cast<std::size_t>(L.E)));
  act.z.assign(x.size(), Vec(static_cast<std::size_t>(L.H)));
  Vec logits(static_cast<std::size_t>(L.K));
  for (std::size_t d = 0; d < x.size(); ++d) {
    for (int e = 0; e < L.E; ++e)
      act.u[d][static_cast<std::size_t>(e)] = h[d][static_cast<std::size_t>(e)] + c[static_cast<std::size_t>(e)] + te[static_cast<std::size_t>(e)];
    for (int j = 0; j < L.H; ++j) {
      double s = th[L.b1 + static_cast<std::size_t>(j)];
      const std::size_t row = L.w1 + static_cast<std::size_t>(j) * L.E;
      for (int e = 0; e < L.E; ++e) s += th[row + static_cast<std::size_t>(e)] * act.u[d][static_cast<std::size_t>(e)];
      act.z[d][static_cast<std::size_t>(j)] = std::tanh(s);
    }
    for (int k = 0; k < L.K; ++k) {
      double s = th[L.b2 + static_cast<std::size_t>(k)];
      const std::size_t row = L.w2 + static_cast<std::size_t>(k) * L.H;
      for (int j = 0; j < L.H; ++j) s += th[row + static_cast<std::size_t>(j)] * act.z[d][static_cast<std::size_t>(j)];
      logits[static_cast<std::size_t>(k)] = s;
    }
    softmax(logits.data(), L.K, f[d]);
  }
}

}  // namespace

std::int64_t ModelDims::joint_states() const {
  std::int64_t j = 1;
  for (int d = 0; d < D; ++d) {
    j *= K;
    if (j > 4096) throw std::invalid_argument("exact_tabular: K^D exceeds 4096");
  }
  return j;
}

std::size_t ModelDims::param_count() const {
  if (backend == Backend::exact_tabular) {
    return static_cast<std::size_t>(time_bins) * static_cast<std::size_t>(joint_states()) *
           static_cast<std::size_t>(D) * static_cast<std::size_t>(K);
  }
  return NetLayout(*this).total;
}

ModelParams ModelParams::zeros(const ModelDims& dims) {
  ModelParams p;
  p.dims = dims;
  p.theta.assign(dims.param_count(), 0.0);
  p.ema = p.theta;
  return p;
}

ModelParams ModelParams::init(const ModelDims& dims, std::uint64_t seed) {
  ModelParams p = zeros(dims);
  Rng rng(seed);
  for (double& v : p.theta) v = 0.2 * rng.uniform() - 0.1;
  p.ema = p.theta;
  return p;
}

int time_bin(const ModelDims& dims, double t) {
  const int b = static_cast<int>(std::floor(t / dims.T * dims.time_bins));
  return std::clamp(b, 0, dims.time_bins - 1);
}

std::int64_t joint_index(const Sequence& x, int K) {
  std::int64_t j = 0;
  for (std::size_t d = x.size(); d-- > 0;) {
    if (x[d] < 0 || x[d] >= K) throw std::out_of_range("joint_index: category out of range");
    j = j * K + x[d];
  }
  return j;
}

std::vector<Vec> predict(const ModelParams& params, const Sequence& x_t, double t, bool use_ema) {
  const ModelDims& dims = params.dims;
  if (static_cast<int>(x_t.size()) != dims.D) throw std::invalid_argument("predict: wrong D");
  const std::vector<double>& th = use_ema ? params.ema : params.theta;
  std::vector<Vec> f(x_t.size(), Vec(static_cast<std::size_t>(dims.K)));
  if (dims.backend == Backend::exact_tabular) {
    const std::int64_t j = joint_index(x_t, dims.K);
    const std::int64_t b = time_bin(dims, t);
    const std::size_t base =
        ((static_cast<std::size_t>(b) * static_cast<std::size_t>(dims.joint_states()) +
          static_cast<std::size_t>(j)) *
         static_cast<std::size_t>(dims.D)) *
        static_cast<std::size_t>(dims.K);
    for (int d = 0; d < dims.D; ++d)
      softmax(th.data() + base + static_cast<std::size_t>(d) * dims.K, dims.K, f[static_cast<std::size_t>(d)]);
    return f;
  }
  NetActivations act;
  net_forward(params, th, x_t, t, act, f);
  return f;
}

void backprop(const ModelParams& params, const Sequence& x_t, double t,
              const std::vector<Vec>& f, const std::vector<Vec>& dldf,
              std::vector<double>& grad) {
  const ModelDims& dims = params.dims;
  if (grad.size() != params.theta.size()) throw std::invalid_argument("backprop: grad size");
  Vec dlogits(static_cast<std::size_t>(dims.K));

  if (dims.backend == Backend::exact_tabular) {
    const std::int64_t j = joint_index(x_t, dims.K);
    const std::int64_t b = time_bin(dims, t);
    const std::size_t base =
        ((static_cast<std::size_t>(b) * static_cast<std::size_t>(dims.joint_states()) +
          static_cast<std::size_t>(j)) *
         static_cast<std::size_t>(dims.D)) *
        static_cast<std::size_t>(dims.K);
    for (int d = 0; d < dims.D; ++d) {
      softmax_vjp(f[static_cast<std::size_t>(d)], dldf[static_cast<std::size_t>(d)], dlogits);
      for (int k = 0; k < dims.K; ++k)
        grad[base + static_cast<std::size_t>(d) * dims.K + k] += dlogits[static_cast<std::size_t>(k)];
    }
    return;
  }

  const NetLayout L(dims);
  // Re-run the forward pass for activations; desk-scale nets make the extra
  // pass cheaper than caching activations through the loss plumbing.
  NetActivations act;
  std::vector<Vec> f2(x_t.size(), Vec(static_cast<std::size_t>(dims.K)));
  net_forward(params, params.theta, x_t, t, act, f2);

  Vec du_sum(static_cast<std::size_t>(L.E), 0.0);
  std::vector<Vec> dh(x_t.size(), Vec(static_cast<std::size_t>(L.E), 0.0));
  Vec da(static_cast<std::size_t>(L.H));
  for (std::size_t d = 0; d < x_t.size(); ++d) {
    softmax_vjp(f[d], dldf[d], dlogits);
    // W2, b2 and dz.
    Vec dz(static_cast<std::size_t>(L.H), 0.0);
    for (int k = 0; k < L.K; ++k) {
      const double g = dlogits[static_cast<std::size_t>(k)];
      const std::size_t row = L.w2 + static_cast<std::size_t>(k) * L.H;
      grad[L.b2 + static_cast<std::size_t>(k)] += g;
      for (int jh = 0; jh < L.H; ++jh) {
        grad[row + static_cast<std::size_t>(jh)] += g * act.z[d][static_cast<std::size_t>(jh)];
        dz[static_cast<std::size_t>(jh)] += g * params.theta[row + static_cast<std::size_t>(jh)];
      }
    }
    // tanh backward, then W1, b1 and du.
    for (int jh = 0; jh < L.H; ++jh) {
      const double zz = act.z[d][static_cast<std::size_t>(jh)];
      da[static_cast<std::size_t>(jh)] = dz[static_cast<std::size_t>(jh)] * (1.0 - zz * zz);
    }
    for (int jh = 0; jh < L.H; ++jh) {
      const double g = da[static_cast<std::size_t>(jh)];
      const std::size_t row = L.w1 + static_cast<std::size_t>(jh) * L.E;
      grad[L.b1 + static_cast<std::size_t>(jh)] += g;
      for (int e = 0; e < L.E; ++e) {
        grad[row + static_cast<std::size_t>(e)] += g * act.u[d][static_cast<std::size_t>(e)];
        dh[d][static_cast<std::size_t>(e)] += g * params.theta[row + static_cast<std::size_t>(e)];
      }
    }
    for (int e = 0; e < L.E; ++e) du_sum[static_cast<std::size_t>(e)] += dh[d][static_cast<std::size_t>(e)];
  }

  // u_d = h_d + mean_d'(h_d') + wt*tau: du flows to wt via the sum, to every
  // h_d' via the mean, and to h_d directly.
  for (int e = 0; e < L.E; ++e) {
    const std::size_t row = L.wt + static_cast<std::size_t>(e) * 2 * L.F;
    for (int i = 0; i < 2 * L.F; ++i)
      grad[row + static_cast<std::size_t>(i)] += du_sum[static_cast<std::size_t>(e)] * act.tau[static_cast<std::size_t>(i)];
  }
  const double invD = 1.0 / static_cast<double>(x_t.size());
  for (std::size_t d = 0; d < x_t.size(); ++d) {
    const std::size_t eo = L.emb + static_cast<std::size_t>(x_t[d]) * L.E;
    const std::size_t po = L.pos + d * static_cast<std::size_t>(L.E);
    for (int e = 0; e < L.E; ++e) {
      const double g = dh[d][static_cast<std::size_t>(e)] + du_sum[static_cast<std::size_t>(e)] * invD;
      grad[eo + static_cast<std::size_t>(e)] += g;
      grad[po + static_cast<std::size_t>(e)] += g;
    }
  }
}

void sgd_step(ModelParams& params, const std::vector<double>& grad, const SgdOpts& opts,
              std::vector<double>* momentum_buf) {
  if (grad.size() != params.theta.size()) throw std::invalid_argument("sgd_step: shape mismatch");
  double scale = 1.0;
  if (opts.clip_norm > 0.0) {
    double norm2 = 0.0;
    for (double g : grad) norm2 += g * g;
    const double norm = std::sqrt(norm2);
    if (norm > opts.clip_norm) scale = opts.clip_norm / norm;
  }
  if (opts.momentum > 0.0) {
    if (!momentum_buf || momentum_buf->size() != grad.size())
      throw std::invalid_argument("sgd_step: momentum buffer required");
    for (std::size_t i = 0; i < grad.size(); ++i) {
      (*momentum_buf)[i] = opts.momentum * (*momentum_buf)[i] + scale * grad[i];
      params.theta[i] -= opts.lr * (*momentum_buf)[i];
    }
  } else {
    for (std::size_t i = 0; i < grad.size(); ++i) params.theta[i] -= opts.lr * scale * grad[i];
  }
  const double decay = opts.ema_decay;
  for (std::size_t i = 0; i < params.theta.size(); ++i)
    params.ema[i] = decay * params.ema[i] + (1.0 - decay) * params.theta[i];
}

ModelFn make_model_fn(const ModelParams& params, bool use_ema) {
  return [params, use_ema](const Sequence& x, double t) { return predict(params, x, t, use_ema); };
}

std::string to_string(Backend b) {
  return b == Backend::exact_tabular ? "exact_tabular" : "tiny_net";
}

Backend backend_from_string(const std::string& s) {
  if (s == "exact_tabular") return Backend::exact_tabular;
  if (s == "tiny_net") return Backend::tiny_net;
  throw std::invalid_argument("unknown backend: " + s);
}

}  // namespace usd3
