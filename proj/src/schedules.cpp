#include "usd3/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace usd3 {

namespace {

constexpr double kAlphaFloor = 1e-12;
constexpr double kBetaCap = 1e12;

void check_time(const NoiseSchedule& s, double t) {
  if (!(t >= 0.0 && t <= s.T)) throw std::domain_error("schedule: t outside [0, T]");
}

double cosine_h(const NoiseSchedule& s, double t) {
  return std::cos((t / s.T + s.a) / (1.0 + s.a) * std::numbers::pi / 2.0);
}

double alpha_bar_raw(const NoiseSchedule& s, double t) {
  switch (s.kind) {
    case ScheduleKind::cosine:
      return cosine_h(s, t) / cosine_h(s, 0.0);
    case ScheduleKind::linear:
      return 1.0 - t / s.T;
    case ScheduleKind::exponential:
      return std::exp(s.T * s.a * (1.0 - std::pow(s.b, t / s.T)));
    case ScheduleKind::constant_rate:
      return std::exp(-s.c * t);
  }
  throw std::logic_error("unreachable");
}

void validate(const NoiseSchedule& s) {
  if (!(s.T > 0.0)) throw std::invalid_argument("schedule: T must be positive");
  if (s.mode == TimeMode::discrete && (s.T != std::floor(s.T) || s.T < 2.0))
    throw std::invalid_argument("schedule: discrete mode needs integer T >= 2");
  switch (s.kind) {
    case ScheduleKind::cosine:
      if (!(s.a > 0.0)) throw std::invalid_argument("schedule: cosine offset must be > 0");
      break;
    case ScheduleKind::linear:
      break;
    case ScheduleKind::exponential: {
      if (!(s.b > 1.0) || !(s.a > 0.0))
        throw std::invalid_argument("schedule: exponential needs a > 0, b > 1");
      // Terminal noise level is a hard requirement for this family; the
      // parameters are free otherwise.
      if (alpha_bar_raw(s, s.T) > 1e-6 * (1.0 + 1e-9))
        throw std::invalid_argument("schedule: exponential (a,b) leave alpha_bar(T) above 1e-6");
      break;
    }
    case ScheduleKind::constant_rate:
      if (!(s.c > 0.0)) throw std::invalid_argument("schedule: constant rate must be > 0");
      break;
  }
}

}  // namespace

NoiseSchedule NoiseSchedule::cosine(TimeMode mode, double T, double a) {
  NoiseSchedule s;
  s.kind = ScheduleKind::cosine;
  s.mode = mode;
  s.T = T;
  s.a = a;
  validate(s);
  return s;
}

NoiseSchedule NoiseSchedule::linear(TimeMode mode, double T) {
  NoiseSchedule s;
  s.kind = ScheduleKind::linear;
  s.mode = mode;
  s.T = T;
  validate(s);
  return s;
}

NoiseSchedule NoiseSchedule::exponential(TimeMode mode, double T, double a, double b) {
  NoiseSchedule s;
  s.kind = ScheduleKind::exponential;
  s.mode = mode;
  s.T = T;
  s.b = b;
  s.a = a > 0.0 ? a : std::log(1e6) / (T * (b - 1.0));
  validate(s);
  return s;
}

NoiseSchedule NoiseSchedule::constant_rate(TimeMode mode, double T, double c) {
  NoiseSchedule s;
  s.kind = ScheduleKind::constant_rate;
  s.mode = mode;
  s.T = T;
  s.c = c;
  validate(s);
  return s;
}

double alpha_bar(const NoiseSchedule& sched, double t) {
  check_time(sched, t);
  const double v = alpha_bar_raw(sched, t);
  return std::clamp(v, kAlphaFloor, 1.0);
}

double alpha_bar_cond(const NoiseSchedule& sched, double s, double t) {
  if (!(s < t)) throw std::domain_error("alpha_bar_cond: requires s < t");
  check_time(sched, s);
  check_time(sched, t);
  const double denom = std::max(alpha_bar(sched, s), 1e-300);
  return std::clamp(alpha_bar(sched, t) / denom, 0.0, 1.0);
}

double beta_rate(const NoiseSchedule& sched, double t, bool clip, bool* capped) {
  if (sched.mode != TimeMode::continuous)
    throw std::domain_error("beta_rate: undefined in discrete mode");
  if (!(t > 0.0 && t < sched.T)) throw std::domain_error("beta_rate: t outside (0, T)");
  if (capped) *capped = false;

  double beta = 0.0;
  switch (sched.kind) {
    case ScheduleKind::cosine: {
      const double u = (t / sched.T + sched.a) / (1.0 + sched.a) * std::numbers::pi / 2.0;
      beta = std::numbers::pi * std::tan(u) / (2.0 * sched.T * (1.0 + sched.a));
      break;
    }
    case ScheduleKind::linear:
      beta = 1.0 / (sched.T - t);
      break;
    case ScheduleKind::exponential:
      beta = sched.a * std::pow(sched.b, t / sched.T) * std::log(sched.b);
      break;
    case ScheduleKind::constant_rate:
      beta = sched.c;
      break;
  }
  if (!std::isfinite(beta) || beta > kBetaCap) {
    beta = kBetaCap;
    if (capped) *capped = true;
  }
  if (clip) beta = std::max(1.0, beta);
  return beta;
}

double beta_any_mode(const NoiseSchedule& sched, double t) {
  if (sched.mode == TimeMode::continuous) return beta_rate(sched, t);
  const double h = std::clamp(1e-4 * sched.T, 1e-6, 0.5);
  const double lo = std::max(t - h, 0.0);
  const double hi = std::min(t + h, sched.T);
  const double dlog = std::log(alpha_bar(sched, lo)) - std::log(alpha_bar(sched, hi));
  return std::max(dlog / (hi - lo), 0.0);
}

std::string to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::cosine: return "cosine";
    case ScheduleKind::linear: return "linear";
    case ScheduleKind::exponential: return "exponential";
    case ScheduleKind::constant_rate: return "constant_rate";
  }
  return "?";
}

ScheduleKind schedule_kind_from_string(const std::string& s) {
  if (s == "cosine") return ScheduleKind::cosine;
  if (s == "linear") return ScheduleKind::linear;
  if (s == "exponential") return ScheduleKind::exponential;
  if (s == "constant_rate" || s == "constant-rate" || s == "constant")
    return ScheduleKind::constant_rate;
  throw std::invalid_argument("unknown schedule kind: " + s);
}

std::string to_string(TimeMode mode) {
  return mode == TimeMode::discrete ? "discrete" : "continuous";
}

TimeMode time_mode_from_string(const std::string& s) {
  if (s == "discrete") return TimeMode::discrete;
  if (s == "continuous") return TimeMode::continuous;
  throw std::invalid_argument("unknown time mode: " + s);
}

}  // namespace usd3
