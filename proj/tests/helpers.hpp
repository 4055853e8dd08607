#pragma once

// Shared fixtures for the unit and acceptance suites: schedules that hit
// exact alpha_bar targets, random simplexes, hand-crafted tabular models,
// empirical counting, and central finite differences.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "usd3/core.hpp"
#include "usd3/forward.hpp"
#include "usd3/model.hpp"
#include "usd3/schedules.hpp"

namespace testutil {

// Continuous constant-rate schedule with unit rate, so alpha_bar(t) = e^{-t}.
// Times hitting given alpha_bar values are just -ln(abar).
inline usd3::NoiseSchedule unit_rate_schedule(double T = 50.0) {
  return usd3::NoiseSchedule::constant_rate(usd3::TimeMode::continuous, T, 1.0);
}

inline double time_for_abar(double abar) { return -std::log(abar); }

inline usd3::Vec random_simplex(usd3::Rng& rng, int K, double floor_mass = 0.02) {
  usd3::Vec p(static_cast<std::size_t>(K));
  double sum = 0.0;
  for (double& v : p) {
    v = floor_mass + rng.uniform();
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

// Write logits = ln(probs) into an exact-tabular row so predict() returns
// probs bit-accurately (softmax of ln p is p).
inline void set_tabular_probs(usd3::ModelParams& params, int bin, std::int64_t joint, int d,
                              const usd3::Vec& probs) {
  const usd3::ModelDims& dims = params.dims;
  const std::size_t base =
      ((static_cast<std::size_t>(bin) * static_cast<std::size_t>(dims.joint_states()) +
        static_cast<std::size_t>(joint)) *
       static_cast<std::size_t>(dims.D) +
       static_cast<std::size_t>(d)) *
      static_cast<std::size_t>(dims.K);
  for (int k = 0; k < dims.K; ++k) {
    const double p = probs.at(static_cast<std::size_t>(k));
    params.theta[base + static_cast<std::size_t>(k)] = p > 0.0 ? std::max(std::log(p), -745.0) : -745.0;
  }
  params.ema = params.theta;
}

inline double max_abs_diff(const usd3::Vec& a, const usd3::Vec& b) {
  double mx = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mx = std::max(mx, std::abs(a[i] - b[i]));
  return mx;
}

// Central finite difference of fn along coordinate slot.
template <class Fn>
double central_diff(Fn&& fn, double& slot, double h) {
  const double saved = slot;
  slot = saved + h;
  const double up = fn();
  slot = saved - h;
  const double down = fn();
  slot = saved;
  return (up - down) / (2.0 * h);
}

inline double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-8});
  return std::abs(a - b) / scale;
}

}  // namespace testutil
