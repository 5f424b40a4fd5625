#pragma once

// Single Euler-Maruyama step shared by path recording and the ensemble kernels.

#include <cmath>

#include "htd/sde.hpp"

namespace htd::detail {

enum class StepStatus { Ok, Overflow, Underflow };

struct Walker {
  double x = 0.0;
  double local_time = 0.0;
  std::size_t clamps = 0;
};

struct StepInfo {
  double h = 0.0;
  double x_prev = 0.0;
  double sigma = 0.0;
};

// Advances w by one step of length min(policy step, gap). A remainder shorter than
// 1e-6 of the policy step is absorbed so clipping never leaves a sliver behind.
inline StepStatus advance(const ProcessSpec& spec, const StepPolicy& policy, Walker& w, double gap, RngStream& rng,
                          StepInfo& info) {
  const Coefficients c = spec.at(w.x);
  double h = policy.step(w.x, c.speed);
  if (!(h >= policy.h_min)) return StepStatus::Underflow;
  if (gap <= h * (1.0 + 1e-6)) h = gap;
  const double xn = w.x + c.drift * h + c.sigma * std::sqrt(h) * rng.normal();
  if (!std::isfinite(xn) || xn > kOverflowState) return StepStatus::Overflow;
  info.h = h;
  info.x_prev = w.x;
  info.sigma = c.sigma;
  if (xn >= 0.0) {
    w.x = xn;
    return StepStatus::Ok;
  }
  switch (spec.reflection()) {
    case Reflection::Absolute:
      w.x = -xn;
      w.local_time += -2.0 * xn;
      break;
    case Reflection::Clamp:
      ++w.clamps;
      [[fallthrough]];
    case Reflection::Projection:
      w.x = 0.0;
      w.local_time += -xn;
      break;
  }
  return StepStatus::Ok;
}

inline const char* describe(StepStatus s) {
  switch (s) {
    case StepStatus::Ok: return "ok";
    case StepStatus::Overflow: return "state overflow";
    case StepStatus::Underflow: return "step underflow";
  }
  return "?";
}

}  // namespace htd::detail
