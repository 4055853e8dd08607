#pragma once

// File formats: datasets (K/D header + CSV rows), flat sectioned key-value
// configs, JSON checkpoints with bit-exact hex-encoded parameters, and the
// loss-trace / metrics CSV writers.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "usd3/core.hpp"
#include "usd3/forward.hpp"
#include "usd3/trainer.hpp"

namespace usd3 {

struct Dataset {
  int K = 0;
  int D = 0;
  std::vector<Sequence> sequences;

  void validate() const;
};

Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& ds, const std::string& path);

// Flat dotted-key config ("section.key" -> value). The file form groups keys
// under [section] headers; serialization is sorted, so parse -> serialize ->
// parse is the identity on the map.
using Config = std::map<std::string, std::string>;

Config parse_config(const std::string& text);
Config load_config(const std::string& path);
std::string serialize_config(const Config& cfg);

std::string config_get(const Config& cfg, const std::string& key, const std::string& fallback);
double config_get_double(const Config& cfg, const std::string& key, double fallback);
int config_get_int(const Config& cfg, const std::string& key, int fallback);
bool config_get_bool(const Config& cfg, const std::string& key, bool fallback);

// FNV-1a 64-bit digest of the canonical serialized form.
std::string config_digest(const Config& cfg);

// "uniform" or a comma-separated row, or several rows joined with '|'
// (one per element).
StationaryDist parse_stationary(const std::string& text, int K, int D);
std::string serialize_stationary(const StationaryDist& m);

// Assembles the full training configuration from a parsed config file.
TrainConfig train_config_from(const Config& cfg);

struct Checkpoint {
  int schema = 1;
  NoiseSchedule sched;
  StationaryDist m;
  ModelParams params;
  std::uint64_t seed = 0;
  std::string config_digest;

  static Checkpoint from_train(const TrainConfig& cfg, const ModelParams& params,
                               const std::string& digest);
};

// JSON with sorted keys; doubles ride as 16-hex-digit bit patterns so
// save -> load -> save is byte-identical.
void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

void save_loss_trace(const std::vector<EpochTrace>& trace, const std::string& path);

std::string hex_encode_doubles(const std::vector<double>& v);
std::vector<double> hex_decode_doubles(const std::string& s);

}  // namespace usd3
