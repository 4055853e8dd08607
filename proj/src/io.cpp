#include "usd3/io.hpp"

#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace usd3 {

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::invalid_argument("cannot write file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(what);
    return v;
  } catch (...) {
    throw std::invalid_argument("bad number for " + what + ": '" + s + "'");
  }
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Vec parse_prob_row(const std::string& text, int K) {
  Vec row;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) row.push_back(parse_double(trim(tok), "stationary entry"));
  if (static_cast<int>(row.size()) != K)
    throw std::invalid_argument("stationary row needs exactly K entries");
  double sum = 0.0;
  for (double v : row) {
    if (v < 0.0) throw std::invalid_argument("stationary entries must be nonnegative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw std::invalid_argument("stationary row must sum to 1");
  for (double& v : row) v /= sum;
  return row;
}

}  // namespace

void Dataset::validate() const {
  if (K < 2) throw std::invalid_argument("dataset: K >= 2 required");
  if (D < 1) throw std::invalid_argument("dataset: D >= 1 required");
  for (const Sequence& s : sequences) {
    if (static_cast<int>(s.size()) != D) throw std::invalid_argument("dataset: row length != D");
    for (int v : s)
      if (v < 0 || v >= K) throw std::invalid_argument("dataset: category out of range");
  }
}

Dataset load_dataset(const std::string& path) {
  std::istringstream in(slurp(path));
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("dataset: missing header in " + path);
  Dataset ds;
  if (std::sscanf(line.c_str(), "K=%d D=%d", &ds.K, &ds.D) != 2)
    throw std::invalid_argument("dataset: bad header '" + line + "'");
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    Sequence s;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      int v = 0;
      const std::string t = trim(tok);
      const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (ec != std::errc() || p != t.data() + t.size())
        throw std::invalid_argument("dataset: bad integer '" + t + "'");
      s.push_back(v);
    }
    ds.sequences.push_back(std::move(s));
  }
  ds.validate();
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  ds.validate();
  std::ostringstream out;
  out << "K=" << ds.K << " D=" << ds.D << "\n";
  for (const Sequence& s : ds.sequences) {
    for (std::size_t d = 0; d < s.size(); ++d) {
      if (d) out << ',';
      out << s[d];
    }
    out << "\n";
  }
  spit(path, out.str());
}

Config parse_config(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw std::invalid_argument("config: bad section at line " + std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key = value at line " + std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) throw std::invalid_argument("config: empty key at line " + std::to_string(lineno));
    cfg[section.empty() ? key : section + "." + key] = val;
  }
  return cfg;
}

Config load_config(const std::string& path) { return parse_config(slurp(path)); }

std::string serialize_config(const Config& cfg) {
  // Dotless keys must all precede the first [section] header or they would
  // re-parse into whatever section came before them.
  std::ostringstream out;
  bool any = false;
  for (const auto& [key, val] : cfg) {
    if (key.find('.') != std::string::npos) continue;
    out << key << " = " << val << "\n";
    any = true;
  }
  std::string section;
  for (const auto& [key, val] : cfg) {
    const std::size_t dot = key.find('.');
    if (dot == std::string::npos) continue;
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      if (any) out << "\n";
      out << "[" << sec << "]\n";
      section = sec;
    }
    out << key.substr(dot + 1) << " = " << val << "\n";
    any = true;
  }
  return out.str();
}

std::string config_get(const Config& cfg, const std::string& key, const std::string& fallback) {
  const auto it = cfg.find(key);
  return it == cfg.end() ? fallback : it->second;
}

double config_get_double(const Config& cfg, const std::string& key, double fallback) {
  const auto it = cfg.find(key);
  return it == cfg.end() ? fallback : parse_double(it->second, key);
}

int config_get_int(const Config& cfg, const std::string& key, int fallback) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  const double v = parse_double(it->second, key);
  if (v != std::floor(v)) throw std::invalid_argument("config: integer expected for " + key);
  return static_cast<int>(v);
}

bool config_get_bool(const Config& cfg, const std::string& key, bool fallback) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw std::invalid_argument("config: boolean expected for " + key);
}

std::string config_digest(const Config& cfg) {
  const std::string text = serialize_config(cfg);
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

StationaryDist parse_stationary(const std::string& text, int K, int D) {
  const std::string t = trim(text);
  if (t.empty() || t == "uniform") return StationaryDist::uniform(K);
  if (t.find('|') == std::string::npos) return StationaryDist::shared(parse_prob_row(t, K));
  StationaryDist m;
  std::stringstream ss(t);
  std::string row;
  while (std::getline(ss, row, '|')) m.per_element.push_back(parse_prob_row(trim(row), K));
  if (static_cast<int>(m.per_element.size()) != D)
    throw std::invalid_argument("stationary: need one row per element");
  return m;
}

std::string serialize_stationary(const StationaryDist& m) {
  std::ostringstream out;
  for (std::size_t d = 0; d < m.per_element.size(); ++d) {
    if (d) out << '|';
    for (std::size_t k = 0; k < m.per_element[d].size(); ++k) {
      if (k) out << ',';
      out << fmt_double(m.per_element[d][k]);
    }
  }
  return out.str();
}

TrainConfig train_config_from(const Config& cfg) {
  TrainConfig tc;
  const TimeMode mode = time_mode_from_string(config_get(cfg, "schedule.mode", "discrete"));
  const double T = config_get_double(cfg, "schedule.T", mode == TimeMode::discrete ? 1000.0 : 1.0);
  const std::string kind = config_get(cfg, "schedule.kind", "cosine");
  if (kind == "cosine") {
    tc.sched = NoiseSchedule::cosine(mode, T, config_get_double(cfg, "schedule.a", 0.008));
  } else if (kind == "linear") {
    tc.sched = NoiseSchedule::linear(mode, T);
  } else if (kind == "exponential") {
    tc.sched = NoiseSchedule::exponential(mode, T, config_get_double(cfg, "schedule.a", 0.0),
                                          config_get_double(cfg, "schedule.b", 10.0));
  } else if (kind == "constant_rate") {
    tc.sched = NoiseSchedule::constant_rate(mode, T, config_get_double(cfg, "schedule.c", 0.007));
  } else {
    throw std::invalid_argument("config: unknown schedule.kind '" + kind + "'");
  }
  tc.sched.clip_beta = config_get_bool(cfg, "schedule.clip_beta", false);

  tc.dims.backend = backend_from_string(config_get(cfg, "model.backend", "exact_tabular"));
  tc.dims.K = config_get_int(cfg, "model.K", 0);
  tc.dims.D = config_get_int(cfg, "model.D", 0);
  if (tc.dims.K < 2 || tc.dims.D < 1) throw std::invalid_argument("config: model.K and model.D required");
  tc.dims.T = T;
  tc.dims.time_bins = config_get_int(cfg, "model.time_bins", 32);
  tc.dims.embed = config_get_int(cfg, "model.embed", 16);
  tc.dims.hidden = config_get_int(cfg, "model.hidden", 32);
  tc.dims.fourier = config_get_int(cfg, "model.fourier", 8);

  tc.m = parse_stationary(config_get(cfg, "dist.m", "uniform"), tc.dims.K, tc.dims.D);

  tc.loss.mode = loss_mode_from_string(config_get(cfg, "loss.mode", "usd3"));
  tc.loss.ce_weight = config_get_double(cfg, "loss.ce_weight", -1.0);
  tc.loss.phi_clip = config_get_bool(cfg, "loss.phi_clip", true);
  tc.loss.s_ratio = config_get_double(cfg, "loss.s_ratio", 0.95);

  tc.batch_size = config_get_int(cfg, "train.batch_size", 32);
  tc.epochs = config_get_int(cfg, "train.epochs", 10);
  tc.lr = config_get_double(cfg, "train.lr", 0.1);
  tc.momentum = config_get_double(cfg, "train.momentum", 0.0);
  tc.clip_norm = config_get_double(cfg, "train.clip_norm", 1.0);
  tc.ema_decay = config_get_double(cfg, "train.ema_decay", 0.9999);
  tc.seed = static_cast<std::uint64_t>(config_get_double(cfg, "train.seed", 0.0));
  tc.trace_every = config_get_int(cfg, "train.trace_every", 1);
  tc.validate();
  return tc;
}

Checkpoint Checkpoint::from_train(const TrainConfig& cfg, const ModelParams& params,
                                  const std::string& digest) {
  Checkpoint ck;
  ck.sched = cfg.sched;
  ck.m = cfg.m;
  ck.params = params;
  ck.seed = cfg.seed;
  ck.config_digest = digest;
  return ck;
}

std::string hex_encode_doubles(const std::vector<double>& v) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(v.size() * 16);
  for (double d : v) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(d);
    for (int shift = 60; shift >= 0; shift -= 4) out.push_back(digits[(bits >> shift) & 0xF]);
  }
  return out;
}

std::vector<double> hex_decode_doubles(const std::string& s) {
  if (s.size() % 16 != 0) throw std::invalid_argument("hex payload length not a multiple of 16");
  std::vector<double> out(s.size() / 16);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (std::size_t j = 0; j < 16; ++j) {
      const char c = s[i * 16 + j];
      int nib = 0;
      if (c >= '0' && c <= '9') nib = c - '0';
      else if (c >= 'a' && c <= 'f') nib = c - 'a' + 10;
      else throw std::invalid_argument("bad hex digit in payload");
      bits = (bits << 4) | static_cast<std::uint64_t>(nib);
    }
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  nlohmann::json j;
  j["schema"] = ck.schema;
  j["schedule"]["kind"] = to_string(ck.sched.kind);
  j["schedule"]["mode"] = to_string(ck.sched.mode);
  j["schedule"]["T"] = fmt_double(ck.sched.T);
  j["schedule"]["a"] = fmt_double(ck.sched.a);
  j["schedule"]["b"] = fmt_double(ck.sched.b);
  j["schedule"]["c"] = fmt_double(ck.sched.c);
  j["schedule"]["clip_beta"] = ck.sched.clip_beta;
  j["model"]["backend"] = to_string(ck.params.dims.backend);
  j["model"]["K"] = ck.params.dims.K;
  j["model"]["D"] = ck.params.dims.D;
  j["model"]["time_bins"] = ck.params.dims.time_bins;
  j["model"]["embed"] = ck.params.dims.embed;
  j["model"]["hidden"] = ck.params.dims.hidden;
  j["model"]["fourier"] = ck.params.dims.fourier;
  std::vector<std::string> m_rows;
  for (const Vec& row : ck.m.per_element) m_rows.push_back(hex_encode_doubles(row));
  j["m_hex"] = m_rows;
  j["theta_hex"] = hex_encode_doubles(ck.params.theta);
  j["ema_hex"] = hex_encode_doubles(ck.params.ema);
  j["seed"] = std::to_string(ck.seed);
  j["config_digest"] = ck.config_digest;
  spit(path, j.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(slurp(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("checkpoint parse error in " + path + ": " + e.what());
  }
  Checkpoint ck;
  try {
    ck.schema = j.at("schema").get<int>();
    if (ck.schema != 1) throw std::invalid_argument("unsupported checkpoint schema");
    const TimeMode mode = time_mode_from_string(j.at("schedule").at("mode").get<std::string>());
    const double T = parse_double(j.at("schedule").at("T").get<std::string>(), "schedule.T");
    const std::string kind = j.at("schedule").at("kind").get<std::string>();
    const double a = parse_double(j.at("schedule").at("a").get<std::string>(), "schedule.a");
    const double b = parse_double(j.at("schedule").at("b").get<std::string>(), "schedule.b");
    const double c = parse_double(j.at("schedule").at("c").get<std::string>(), "schedule.c");
    switch (schedule_kind_from_string(kind)) {
      case ScheduleKind::cosine: ck.sched = NoiseSchedule::cosine(mode, T, a); break;
      case ScheduleKind::linear: ck.sched = NoiseSchedule::linear(mode, T); break;
      case ScheduleKind::exponential: ck.sched = NoiseSchedule::exponential(mode, T, a, b); break;
      case ScheduleKind::constant_rate: ck.sched = NoiseSchedule::constant_rate(mode, T, c); break;
    }
    ck.sched.clip_beta = j.at("schedule").at("clip_beta").get<bool>();
    ModelDims dims;
    dims.backend = backend_from_string(j.at("model").at("backend").get<std::string>());
    dims.K = j.at("model").at("K").get<int>();
    dims.D = j.at("model").at("D").get<int>();
    dims.T = T;
    dims.time_bins = j.at("model").at("time_bins").get<int>();
    dims.embed = j.at("model").at("embed").get<int>();
    dims.hidden = j.at("model").at("hidden").get<int>();
    dims.fourier = j.at("model").at("fourier").get<int>();
    for (const auto& row : j.at("m_hex")) ck.m.per_element.push_back(hex_decode_doubles(row.get<std::string>()));
    if (ck.m.per_element.empty()) throw std::invalid_argument("checkpoint: empty stationary dist");
    ck.params.dims = dims;
    ck.params.theta = hex_decode_doubles(j.at("theta_hex").get<std::string>());
    ck.params.ema = hex_decode_doubles(j.at("ema_hex").get<std::string>());
    if (ck.params.theta.size() != dims.param_count() || ck.params.ema.size() != dims.param_count())
      throw std::invalid_argument("checkpoint: parameter payload size mismatch");
    ck.seed = std::stoull(j.at("seed").get<std::string>());
    ck.config_digest = j.at("config_digest").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("checkpoint field error in " + path + ": " + e.what());
  }
  return ck;
}

void save_loss_trace(const std::vector<EpochTrace>& trace, const std::string& path) {
  std::ostringstream out;
  out << "epoch,vlb,ce,l2,total\n";
  for (const EpochTrace& row : trace)
    out << row.epoch << ',' << fmt_double(row.mean.vlb) << ',' << fmt_double(row.mean.ce) << ','
        << fmt_double(row.mean.l2) << ',' << fmt_double(row.mean.total) << "\n";
  spit(path, out.str());
}

}  // namespace usd3
