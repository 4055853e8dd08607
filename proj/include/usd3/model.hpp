#pragma once

// The learnable f(x_t, t) producing, per element d, a distribution over x0^d.
// Two backends: an exact logits table over (time bin, joint state) for
// oracle-grade convergence tests, and a small dense network whose per-element
// outputs condition on the whole sequence via a mean-pooled context.
// Gradients are analytic reverse-mode, entered through dLoss/df.

#include <cstdint>
#include <string>
#include <vector>

#include "usd3/core.hpp"
#include "usd3/loss_continuous.hpp"  // ModelFn

namespace usd3 {

enum class Backend { exact_tabular, tiny_net };

struct ModelDims {
  Backend backend = Backend::exact_tabular;
  int K = 2;
  int D = 1;
  double T = 1.0;       // schedule horizon, for time binning / features
  int time_bins = 32;   // exact_tabular
  int embed = 16;       // tiny_net embedding width E
  int hidden = 32;      // tiny_net hidden width H
  int fourier = 8;      // tiny_net time-feature frequency count F

  std::int64_t joint_states() const;  // K^D, exact_tabular only (<= 4096)
  std::size_t param_count() const;
};

struct ModelParams {
  ModelDims dims;
  std::vector<double> theta;
  std::vector<double> ema;

  static ModelParams zeros(const ModelDims& dims);
  // Uniform [-0.1, 0.1) entries from the seed; EMA starts equal to theta.
  static ModelParams init(const ModelDims& dims, std::uint64_t seed);
};

std::vector<Vec> predict(const ModelParams& params, const Sequence& x_t, double t,
                         bool use_ema = false);

// Accumulate dLoss/dtheta into grad given dLoss/df from the loss modules.
// f must be the predict() output at the same (x_t, t).
void backprop(const ModelParams& params, const Sequence& x_t, double t,
              const std::vector<Vec>& f, const std::vector<Vec>& dldf,
              std::vector<double>& grad);

struct SgdOpts {
  double lr = 0.1;
  double momentum = 0.0;      // 0.9 when enabled
  double clip_norm = 0.0;     // 0 disables; 1.0 matches the training recipe
  double ema_decay = 0.9999;
};

// theta -= lr * (clipped, momentum-filtered) grad; EMA shadow updated after.
// momentum_buf must be param-sized (kept across steps) when momentum > 0.
void sgd_step(ModelParams& params, const std::vector<double>& grad, const SgdOpts& opts,
              std::vector<double>* momentum_buf = nullptr);

// Adapter for sampler/losses that take a plain callable.
ModelFn make_model_fn(const ModelParams& params, bool use_ema = false);

int time_bin(const ModelDims& dims, double t);
std::int64_t joint_index(const Sequence& x, int K);

std::string to_string(Backend b);
Backend backend_from_string(const std::string& s);

}  // namespace usd3
