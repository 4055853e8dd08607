#pragma once

// Unified training loop over both time modes and all loss modes: epoch
// shuffling, per-sample noising, batched analytic gradients with a
// deterministic reduction, SGD with EMA shadow parameters, and a per-epoch
// loss trace.

#include <cstdint>
#include <string>
#include <vector>

#include "usd3/core.hpp"
#include "usd3/forward.hpp"
#include "usd3/loss_discrete.hpp"
#include "usd3/model.hpp"
#include "usd3/schedules.hpp"

namespace usd3 {

struct TrainConfig {
  NoiseSchedule sched;
  LossConfig loss;
  ModelDims dims;
  StationaryDist m;
  int batch_size = 32;
  int epochs = 10;
  double lr = 0.1;
  double momentum = 0.0;
  double clip_norm = 1.0;    // 0 disables
  double ema_decay = 0.9999;
  std::uint64_t seed = 0;
  int trace_every = 1;  // record the mean loss every this many epochs (and the last)

  void validate() const;  // discrete needs integer T >= 2; continuous T > 0
};

struct EpochTrace {
  int epoch = 0;
  LossBreakdown mean;  // per-sample, per-element mean over the epoch
};

struct TrainResult {
  ModelParams params;  // raw theta + EMA shadow
  std::vector<EpochTrace> trace;
};

// Discrete: uniform over {1..T}. Continuous: uniform over (eps, T-eps), eps=1e-4.
double sample_time(const TrainConfig& cfg, Rng& rng);

// Algo: per epoch, shuffle the dataset, walk it in batches; per sample, draw t
// and x_t from a child stream keyed by (epoch, batch, slot), evaluate f,
// accumulate the analytic gradient. Batch gradients average over samples and
// elements, reduce in a fixed pairwise order, and feed one SGD step.
// Deterministic for any USD3_THREADS. A non-finite batch loss aborts with the
// batch index in the message.
TrainResult train(const TrainConfig& cfg, const std::vector<Sequence>& data);

}  // namespace usd3
