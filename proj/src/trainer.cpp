#include "usd3/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "usd3/threading.hpp"

namespace usd3 {

void TrainConfig::validate() const {
  if (sched.mode == TimeMode::discrete) {
    if (sched.T < 2.0 || sched.T != std::floor(sched.T))
      throw std::invalid_argument("discrete mode requires integer T >= 2");
  } else if (!(sched.T > 0.0)) {
    throw std::invalid_argument("continuous mode requires T > 0");
  }
  if (batch_size < 1) throw std::invalid_argument("batch_size >= 1 required");
  if (epochs < 0) throw std::invalid_argument("epochs >= 0 required");
  if (dims.K != m.K()) throw std::invalid_argument("model K and stationary K differ");
}

double sample_time(const TrainConfig& cfg, Rng& rng) {
  if (cfg.sched.mode == TimeMode::discrete) {
    const int T = static_cast<int>(cfg.sched.T);
    return static_cast<double>(1 + rng.uniform_int(T));
  }
  const double eps = 1e-4;
  return eps + rng.uniform() * (cfg.sched.T - 2.0 * eps);
}

namespace {

struct SampleOut {
  LossBreakdown loss;
  std::vector<double> grad;  // already scaled by 1/(batch*D)
};

}  // namespace

TrainResult train(const TrainConfig& cfg, const std::vector<Sequence>& data) {
  cfg.validate();
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  for (const Sequence& s : data) {
    if (static_cast<int>(s.size()) != cfg.dims.D) throw std::invalid_argument("train: sequence length != D");
    for (int v : s)
      if (v < 0 || v >= cfg.dims.K) throw std::invalid_argument("train: category out of range");
  }

  TrainResult out;
  out.params = ModelParams::init(cfg.dims, cfg.seed ^ 0xA5A5A5A5ULL);
  if (cfg.epochs == 0) return out;

  Rng root(cfg.seed);
  const std::size_t n = data.size();
  const std::size_t num_batches = (n + static_cast<std::size_t>(cfg.batch_size) - 1) /
                                  static_cast<std::size_t>(cfg.batch_size);
  SgdOpts opts;
  opts.lr = cfg.lr;
  opts.momentum = cfg.momentum;
  opts.clip_norm = cfg.clip_norm;
  opts.ema_decay = cfg.ema_decay;
  std::vector<double> momentum_buf;
  if (cfg.momentum > 0.0) momentum_buf.assign(out.params.theta.size(), 0.0);

  std::vector<std::size_t> order(n);
  std::vector<double> batch_grad(out.params.theta.size(), 0.0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Deterministic Fisher-Yates from a per-epoch child stream.
    // High bit keeps shuffle streams disjoint from per-sample streams below.
    Rng shuffle_rng = root.child(0x8000000000000000ULL | static_cast<std::uint64_t>(epoch));
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(shuffle_rng.uniform_int(static_cast<int>(i)));
      std::swap(order[i - 1], order[j]);
    }

    LossBreakdown epoch_sum;
    for (std::size_t b = 0; b < num_batches; ++b) {
      const std::size_t lo = b * static_cast<std::size_t>(cfg.batch_size);
      const std::size_t hi = std::min(n, lo + static_cast<std::size_t>(cfg.batch_size));
      const std::size_t bs = hi - lo;
      const double inv_scale = 1.0 / (static_cast<double>(bs) * static_cast<double>(cfg.dims.D));

      std::vector<SampleOut> per_sample(bs);
      parallel_for(bs, [&](std::size_t slot) {
        // Child stream id encodes (epoch, batch, slot); fan-out order free.
        const std::uint64_t stream =
            ((static_cast<std::uint64_t>(epoch) * num_batches + b) << 20) + slot + 1;
        Rng rng = root.child(stream);
        const Sequence& x0 = data[order[lo + slot]];
        const double t = sample_time(cfg, rng);
        const Sequence x_t = sample_forward(x0, t, cfg.sched, cfg.m, rng);
        const std::vector<Vec> f = predict(out.params, x_t, t, false);
        std::vector<Vec> dldf;
        per_sample[slot].loss = combined_loss_grad(cfg.loss, f, x_t, x0, t, cfg.m, cfg.sched, dldf);
        for (Vec& row : dldf)
          for (double& v : row) v *= inv_scale;
        per_sample[slot].grad.assign(out.params.theta.size(), 0.0);
        backprop(out.params, x_t, t, f, dldf, per_sample[slot].grad);
      });

      std::vector<std::vector<double>> grads(bs);
      std::vector<double> vlbs(bs), ces(bs), l2s(bs), totals(bs);
      for (std::size_t i = 0; i < bs; ++i) {
        grads[i] = std::move(per_sample[i].grad);
        vlbs[i] = per_sample[i].loss.vlb;
        ces[i] = per_sample[i].loss.ce;
        l2s[i] = per_sample[i].loss.l2;
        totals[i] = per_sample[i].loss.total;
      }
      pairwise_reduce(grads, batch_grad);
      LossBreakdown batch_mean;
      batch_mean.vlb = pairwise_sum(vlbs) * inv_scale;
      batch_mean.ce = pairwise_sum(ces) * inv_scale;
      batch_mean.l2 = pairwise_sum(l2s) * inv_scale;
      batch_mean.total = pairwise_sum(totals) * inv_scale;
      batch_mean.ce_weight = resolved_ce_weight(cfg.loss);
      if (!std::isfinite(batch_mean.total))
        throw numeric_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                            " batch " + std::to_string(b));

      sgd_step(out.params, batch_grad, opts, cfg.momentum > 0.0 ? &momentum_buf : nullptr);

      const double w = static_cast<double>(bs) / static_cast<double>(n);
      epoch_sum.vlb += w * batch_mean.vlb;
      epoch_sum.ce += w * batch_mean.ce;
      epoch_sum.l2 += w * batch_mean.l2;
      epoch_sum.total += w * batch_mean.total;
    }

    const int every = std::max(1, cfg.trace_every);
    if (epoch % every == 0 || epoch == cfg.epochs - 1) {
      epoch_sum.ce_weight = resolved_ce_weight(cfg.loss);
      out.trace.push_back({epoch, epoch_sum});
    }
  }
  return out;
}

}  // namespace usd3
