#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "usd3/schedules.hpp"

using namespace usd3;

namespace {

// Simpson quadrature of beta over [lo, hi] with n (even) panels.
double integrate_beta(const NoiseSchedule& s, double lo, double hi, int n = 2000) {
  const double h = (hi - lo) / n;
  double acc = beta_rate(s, lo) + beta_rate(s, hi);
  for (int i = 1; i < n; ++i) acc += beta_rate(s, lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

}  // namespace

TEST_CASE("alpha_bar boundary values") {
  const auto cos_s = NoiseSchedule::cosine(TimeMode::continuous, 1.0);
  const auto lin_s = NoiseSchedule::linear(TimeMode::continuous, 1.0);
  const auto exp_s = NoiseSchedule::exponential(TimeMode::continuous, 1.0);
  const auto cr_s = NoiseSchedule::constant_rate(TimeMode::continuous, 1.0, 0.007);

  CHECK(alpha_bar(cos_s, 0.0) == 1.0);
  CHECK(alpha_bar(lin_s, 0.0) == 1.0);
  CHECK(alpha_bar(exp_s, 0.0) == 1.0);
  CHECK(alpha_bar(cr_s, 0.0) == 1.0);

  // Cosine lands at cos(pi/2) ~ 6e-17 and linear at exactly 0; both floor.
  CHECK(alpha_bar(cos_s, 1.0) == 1e-12);
  CHECK(alpha_bar(lin_s, 1.0) == 1e-12);
  // The default exponential parameterization puts the terminal level at 1e-6.
  CHECK(alpha_bar(exp_s, 1.0) == doctest::Approx(1e-6).epsilon(1e-9));
  // Constant rate keeps most signal at these desk-scale rates.
  CHECK(alpha_bar(cr_s, 1.0) == doctest::Approx(std::exp(-0.007)).epsilon(1e-15));
  CHECK(alpha_bar(cr_s, 0.5) == doctest::Approx(std::exp(-0.0035)).epsilon(1e-15));
}

TEST_CASE("linear schedule midpoint value") {
  const auto s = NoiseSchedule::linear(TimeMode::discrete, 1000.0);
  CHECK(alpha_bar(s, 250.0) == 0.75);
  CHECK(alpha_bar(s, 500.0) == 0.5);
}

TEST_CASE("alpha_bar is monotone non-increasing") {
  const NoiseSchedule kinds[] = {
      NoiseSchedule::cosine(TimeMode::continuous, 2.0),
      NoiseSchedule::linear(TimeMode::continuous, 2.0),
      NoiseSchedule::exponential(TimeMode::continuous, 2.0),
      NoiseSchedule::constant_rate(TimeMode::continuous, 2.0, 3.0),
  };
  for (const auto& s : kinds) {
    double prev = alpha_bar(s, 0.0);
    for (int i = 1; i <= 200; ++i) {
      const double cur = alpha_bar(s, 2.0 * i / 200.0);
      CHECK(cur <= prev + 1e-15);
      prev = cur;
    }
  }
}

TEST_CASE("alpha_bar rejects out-of-range times") {
  const auto s = NoiseSchedule::linear(TimeMode::continuous, 1.0);
  CHECK_THROWS_AS(alpha_bar(s, -0.1), std::domain_error);
  CHECK_THROWS_AS(alpha_bar(s, 1.1), std::domain_error);
}

TEST_CASE("alpha_bar_cond composes with alpha_bar") {
  const NoiseSchedule kinds[] = {
      NoiseSchedule::cosine(TimeMode::continuous, 1.0),
      NoiseSchedule::exponential(TimeMode::continuous, 1.0),
      NoiseSchedule::constant_rate(TimeMode::continuous, 1.0, 2.0),
  };
  for (const auto& s : kinds) {
    for (int i = 1; i < 10; ++i) {
      const double u = 0.08 * i;
      const double v = u + 0.15;
      CHECK(alpha_bar_cond(s, u, v) * alpha_bar(s, u) ==
            doctest::Approx(alpha_bar(s, v)).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(alpha_bar_cond(kinds[0], 0.5, 0.5), std::domain_error);
  CHECK_THROWS_AS(alpha_bar_cond(kinds[0], 0.6, 0.5), std::domain_error);
}

TEST_CASE("beta integrates to the log survival drop") {
  struct Case {
    NoiseSchedule s;
    double lo, hi;
  };
  const Case cases[] = {
      {NoiseSchedule::cosine(TimeMode::continuous, 1.0), 0.1, 0.8},
      {NoiseSchedule::linear(TimeMode::continuous, 1.0), 0.1, 0.8},
      {NoiseSchedule::exponential(TimeMode::continuous, 1.0), 0.1, 0.8},
      {NoiseSchedule::constant_rate(TimeMode::continuous, 1.0, 0.3), 0.1, 0.8},
  };
  for (const auto& c : cases) {
    const double integral = integrate_beta(c.s, c.lo, c.hi);
    const double drop = std::log(alpha_bar(c.s, c.lo)) - std::log(alpha_bar(c.s, c.hi));
    CHECK(integral == doctest::Approx(drop).epsilon(1e-6));
  }
}

TEST_CASE("constant rate beta is the rate") {
  const auto s = NoiseSchedule::constant_rate(TimeMode::continuous, 1.0, 2.0);
  CHECK(beta_rate(s, 0.25) == 2.0);
  CHECK(beta_rate(s, 0.75) == 2.0);
}

TEST_CASE("beta divergence is capped and reported") {
  const auto s = NoiseSchedule::linear(TimeMode::continuous, 1.0);
  bool capped = false;
  const double b = beta_rate(s, 1.0 - 1e-14, false, &capped);
  CHECK(b == 1e12);
  CHECK(capped);
  capped = true;
  beta_rate(s, 0.5, false, &capped);
  CHECK_FALSE(capped);
}

TEST_CASE("beta clip variant floors at 1") {
  const auto s = NoiseSchedule::constant_rate(TimeMode::continuous, 1.0, 0.25);
  CHECK(beta_rate(s, 0.5, true) == 1.0);
  const auto hot = NoiseSchedule::constant_rate(TimeMode::continuous, 1.0, 4.0);
  CHECK(beta_rate(hot, 0.5, true) == 4.0);
}

TEST_CASE("beta domain errors") {
  const auto cont = NoiseSchedule::linear(TimeMode::continuous, 1.0);
  CHECK_THROWS_AS(beta_rate(cont, 0.0), std::domain_error);
  CHECK_THROWS_AS(beta_rate(cont, 1.0), std::domain_error);
  const auto disc = NoiseSchedule::cosine(TimeMode::discrete, 100.0);
  CHECK_THROWS_AS(beta_rate(disc, 50.0), std::domain_error);
}

TEST_CASE("beta_any_mode matches the continuous rate through the discrete extension") {
  const auto disc = NoiseSchedule::cosine(TimeMode::discrete, 1000.0);
  const auto cont = NoiseSchedule::cosine(TimeMode::continuous, 1000.0);
  for (double t : {100.0, 400.0, 700.0}) {
    CHECK(beta_any_mode(disc, t) == doctest::Approx(beta_rate(cont, t)).epsilon(1e-6));
  }
  CHECK(beta_any_mode(cont, 400.0) == beta_rate(cont, 400.0));
}

TEST_CASE("constructor validation") {
  CHECK_THROWS_AS(NoiseSchedule::cosine(TimeMode::continuous, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(NoiseSchedule::cosine(TimeMode::continuous, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(NoiseSchedule::cosine(TimeMode::discrete, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(NoiseSchedule::cosine(TimeMode::discrete, 10.5), std::invalid_argument);
  CHECK_THROWS_AS(NoiseSchedule::constant_rate(TimeMode::continuous, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(NoiseSchedule::constant_rate(TimeMode::continuous, 1.0, -2.0), std::invalid_argument);
  // Explicit exponential parameters must still reach the terminal noise level.
  CHECK_THROWS_AS(NoiseSchedule::exponential(TimeMode::continuous, 1.0, 1.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(NoiseSchedule::exponential(TimeMode::continuous, 1.0, 2.0, 0.5), std::invalid_argument);
  CHECK_NOTHROW(NoiseSchedule::exponential(TimeMode::continuous, 1.0, 0.0, 10.0));
}

TEST_CASE("enum string round trips") {
  for (auto k : {ScheduleKind::cosine, ScheduleKind::linear, ScheduleKind::exponential,
                 ScheduleKind::constant_rate}) {
    CHECK(schedule_kind_from_string(to_string(k)) == k);
  }
  CHECK(schedule_kind_from_string("constant-rate") == ScheduleKind::constant_rate);
  CHECK(schedule_kind_from_string("constant") == ScheduleKind::constant_rate);
  CHECK_THROWS_AS(schedule_kind_from_string("quadratic"), std::invalid_argument);
  for (auto m : {TimeMode::discrete, TimeMode::continuous}) {
    CHECK(time_mode_from_string(to_string(m)) == m);
  }
  CHECK_THROWS_AS(time_mode_from_string("both"), std::invalid_argument);
}
