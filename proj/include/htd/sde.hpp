#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "htd/construct.hpp"
#include "htd/rng.hpp"

namespace htd {

/// Step-size rule for the Euler-Maruyama integrator.
///  - Uniform:       h
///  - AdaptiveSpeed: min(h_max, kappa / speed(x))
///  - AdaptiveScale: min(h_max, kappa (1 + x)^2 / speed(x))
/// speed(x) is F(x) for the accelerated process and 1 otherwise. Under AdaptiveScale
/// an accelerated step from x is the Langevin step of length kappa (1 + x)^2 from x.
struct StepPolicy {
  enum class Mode { Uniform, AdaptiveSpeed, AdaptiveScale };

  Mode mode = Mode::AdaptiveScale;
  double h = 1e-3;
  double h_max = 1e-2;
  double kappa = 1e-3;
  /// A policy step below this aborts the path.
  double h_min = 1e-20;

  double step(double x, double speed) const {
    switch (mode) {
      case Mode::Uniform: return h;
      case Mode::AdaptiveSpeed: return std::min(h_max, kappa / speed);
      case Mode::AdaptiveScale: return std::min(h_max, kappa * (1.0 + x) * (1.0 + x) / speed);
    }
    return h;
  }
  /// Throws std::invalid_argument on non-positive or inconsistent fields.
  void validate() const;

  static StepPolicy uniform(double h);
  static StepPolicy adaptive_speed(double h_max, double kappa);
  static StepPolicy adaptive_scale(double h_max, double kappa);
};

const char* to_string(StepPolicy::Mode mode);

struct Path {
  std::vector<double> times;
  std::vector<double> states;
  std::vector<double> local_time;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::size_t clamp_count = 0;

  std::size_t size() const { return times.size(); }
  /// Fraction of recorded states that are exactly zero (non-stickiness diagnostic).
  double zero_fraction() const;
};

/// Raised when a path leaves the representable range or its step underflows.
class PathAborted : public NumericalError {
 public:
  PathAborted(const std::string& what, double t, double x) : NumericalError(what), time(t), state(x) {}
  double time;
  double state;
};

/// Raised by the time change when the Y-path is too short for the requested X-horizon.
class HorizonExhausted : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Above this the state counts as exploded.
inline constexpr double kOverflowState = 1e30;

/// Euler-Maruyama with reflection at zero, ending exactly at T. Every step is recorded.
Path simulate_path(const ProcessSpec& spec, double x0, double T, const StepPolicy& policy, RngStream& stream);

/// chi(t) = int_0^t F(Y_s)^-1 ds, trapezoid per step, and its inverse beta.
class TimeChange {
 public:
  TimeChange(const Path& y, const SpeedFunction& sf);

  double chi(double t) const;
  double beta(double s) const;
  double chi_end() const { return chi_.back(); }
  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& chi_values() const { return chi_; }
  /// Largest per-step slope of chi.
  double max_slope() const;

 private:
  std::vector<double> times_;
  std::vector<double> chi_;
};

double chi_end(const Path& y, const SpeedFunction& sf);

/// X_t = Y_{beta_t}: times chi(t_i) below T_new, plus a final point at T_new whose
/// state is interpolated linearly in chi. Throws HorizonExhausted if chi_end < T_new.
Path time_change_path(const Path& y, const SpeedFunction& sf, double T_new);

}  // namespace htd
