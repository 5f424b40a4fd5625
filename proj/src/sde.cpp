#include "htd/sde.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kernel.hpp"

namespace htd {

void StepPolicy::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (mode == Mode::Uniform) {
    if (!positive(h)) throw std::invalid_argument("step policy: h must be > 0");
  } else if (!positive(h_max) || !positive(kappa)) {
    throw std::invalid_argument("step policy: h_max and kappa must be > 0");
  }
  if (!(h_min >= 0.0)) throw std::invalid_argument("step policy: h_min must be >= 0");
  if (h_min >= (mode == Mode::Uniform ? h : h_max)) {
    throw std::invalid_argument("step policy: h_min must be below the largest step");
  }
}

StepPolicy StepPolicy::uniform(double h) {
  StepPolicy p;
  p.mode = Mode::Uniform;
  p.h = h;
  p.h_max = h;
  return p;
}

StepPolicy StepPolicy::adaptive_speed(double h_max, double kappa) {
  StepPolicy p;
  p.mode = Mode::AdaptiveSpeed;
  p.h_max = h_max;
  p.kappa = kappa;
  return p;
}

StepPolicy StepPolicy::adaptive_scale(double h_max, double kappa) {
  StepPolicy p;
  p.mode = Mode::AdaptiveScale;
  p.h_max = h_max;
  p.kappa = kappa;
  return p;
}

const char* to_string(StepPolicy::Mode mode) {
  switch (mode) {
    case StepPolicy::Mode::Uniform: return "uniform";
    case StepPolicy::Mode::AdaptiveSpeed: return "adaptive_speed";
    case StepPolicy::Mode::AdaptiveScale: return "adaptive_scale";
  }
  return "?";
}

double Path::zero_fraction() const {
  if (states.empty()) return 0.0;
  const auto zeros = std::count(states.begin(), states.end(), 0.0);
  return static_cast<double>(zeros) / static_cast<double>(states.size());
}

Path simulate_path(const ProcessSpec& spec, double x0, double T, const StepPolicy& policy, RngStream& stream) {
  if (!(x0 >= 0.0) || !std::isfinite(x0)) throw std::invalid_argument("simulate_path: x0 must be finite and >= 0");
  if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("simulate_path: T must be finite and > 0");
  policy.validate();

  Path path;
  path.seed = stream.seed();
  path.stream = stream.index();
  path.times.push_back(0.0);
  path.states.push_back(x0);
  path.local_time.push_back(0.0);

  detail::Walker w{x0};
  detail::StepInfo info;
  double t = 0.0;
  while (t < T) {
    const auto status = detail::advance(spec, policy, w, T - t, stream, info);
    if (status != detail::StepStatus::Ok) {
      throw PathAborted(std::string("simulate_path: ") + detail::describe(status) + " at t=" + std::to_string(t) +
                            ", x=" + std::to_string(w.x),
                        t, w.x);
    }
    t = (info.h == T - t) ? T : t + info.h;
    path.times.push_back(t);
    path.states.push_back(w.x);
    path.local_time.push_back(w.local_time);
  }
  path.clamp_count = w.clamps;
  return path;
}

TimeChange::TimeChange(const Path& y, const SpeedFunction& sf) : times_(y.times) {
  if (y.times.empty() || y.times.size() != y.states.size()) {
    throw std::invalid_argument("TimeChange: path must be nonempty with matching times and states");
  }
  chi_.resize(times_.size());
  chi_[0] = 0.0;
  double inv_prev = 1.0 / sf(y.states[0]);
  for (std::size_t i = 1; i < times_.size(); ++i) {
    const double inv = 1.0 / sf(y.states[i]);
    chi_[i] = chi_[i - 1] + 0.5 * (times_[i] - times_[i - 1]) * (inv_prev + inv);
    inv_prev = inv;
  }
}

namespace {

double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - xs.begin()) - 1;
  const double w = (x - xs[k]) / (xs[k + 1] - xs[k]);
  return ys[k] + w * (ys[k + 1] - ys[k]);
}

}  // namespace

double TimeChange::chi(double t) const { return interpolate(times_, chi_, t); }

double TimeChange::beta(double s) const { return interpolate(chi_, times_, s); }

double TimeChange::max_slope() const {
  double worst = 0.0;
  for (std::size_t i = 1; i < chi_.size(); ++i) {
    worst = std::max(worst, (chi_[i] - chi_[i - 1]) / (times_[i] - times_[i - 1]));
  }
  return worst;
}

double chi_end(const Path& y, const SpeedFunction& sf) { return TimeChange(y, sf).chi_end(); }

Path time_change_path(const Path& y, const SpeedFunction& sf, double T_new) {
  if (!(T_new > 0.0)) throw std::invalid_argument("time_change_path: T_new must be > 0");
  const TimeChange tc(y, sf);
  if (tc.chi_end() < T_new) {
    throw HorizonExhausted("time_change_path: horizon exhausted (chi_end=" + std::to_string(tc.chi_end()) +
                           " < " + std::to_string(T_new) + "); resimulate Y with a longer horizon");
  }
  Path x;
  x.seed = y.seed;
  x.stream = y.stream;
  x.clamp_count = y.clamp_count;
  const auto& chi = tc.chi_values();
  std::size_t i = 0;
  for (; i < chi.size() && chi[i] < T_new; ++i) {
    x.times.push_back(chi[i]);
    x.states.push_back(y.states[i]);
    x.local_time.push_back(y.local_time[i]);
  }
  // chi[i] >= T_new here; close the path at T_new.
  const double w = (T_new - chi[i - 1]) / (chi[i] - chi[i - 1]);
  x.times.push_back(T_new);
  x.states.push_back(y.states[i - 1] + w * (y.states[i] - y.states[i - 1]));
  x.local_time.push_back(y.local_time[i - 1] + w * (y.local_time[i] - y.local_time[i - 1]));
  return x;
}

}  // namespace htd
