#pragma once

// Noise schedules supplying alpha_bar(t), alpha_bar(t|s) and the rate beta(t)
// for discrete time t in {0..T} and continuous time t in [0,T].

#include <string>

namespace usd3 {

enum class TimeMode { discrete, continuous };

enum class ScheduleKind { cosine, linear, exponential, constant_rate };

struct NoiseSchedule {
  ScheduleKind kind = ScheduleKind::cosine;
  TimeMode mode = TimeMode::continuous;
  double T = 1.0;  // integer-valued in discrete mode (default 1000), real otherwise
  double a = 0.008;  // cosine offset, or exponential scale
  double b = 10.0;   // exponential base (> 1)
  double c = 0.007;  // constant rate
  bool clip_beta = false;

  static NoiseSchedule cosine(TimeMode mode, double T, double a = 0.008);
  static NoiseSchedule linear(TimeMode mode, double T);
  // a <= 0 picks the default a = ln(1e6) / (T*(b-1)), which lands
  // alpha_bar(T) exactly at 1e-6; explicit (a, b) must still satisfy
  // alpha_bar(T) <= 1e-6 or construction throws.
  static NoiseSchedule exponential(TimeMode mode, double T, double a = 0.0, double b = 10.0);
  static NoiseSchedule constant_rate(TimeMode mode, double T, double c);
};

// alpha_bar(t), floored at 1e-12 so downstream divisions by alpha-dependent
// terms stay finite. Throws if t is outside [0, T].
double alpha_bar(const NoiseSchedule& sched, double t);

// alpha_bar(t|s) = alpha_bar(t) / alpha_bar(s), denominator clamped at 1e-300.
// Throws if s >= t or out of range.
double alpha_bar_cond(const NoiseSchedule& sched, double s, double t);

// beta(t) for continuous mode, 0 < t < T. Values diverging at an endpoint are
// capped at 1e12 with *capped set. clip applies the max(1, beta) variant used
// by the approximated continuous loss. Throws in discrete mode.
double beta_rate(const NoiseSchedule& sched, double t, bool clip = false, bool* capped = nullptr);

// beta(t) usable in either mode: continuous mode forwards to beta_rate,
// discrete mode evaluates -d(ln alpha_bar)/dt by central finite differences
// on the schedule's continuous extension (corrector support for
// discrete-trained models).
double beta_any_mode(const NoiseSchedule& sched, double t);

std::string to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(const std::string& s);
std::string to_string(TimeMode mode);
TimeMode time_mode_from_string(const std::string& s);

}  // namespace usd3
