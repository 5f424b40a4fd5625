#include "htd/ensemble.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <omp.h>

#include "kernel.hpp"

namespace htd {

namespace {

constexpr std::uint64_t kInitialLawTag = 0x1A2B3C4D5E6F7081ull;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Per-path counters, reduced in index order after the loop.
struct PathCounters {
  std::uint64_t steps = 0;
  std::uint64_t zeros = 0;
  std::size_t clamps = 0;
  bool aborted = false;
};

template <class Body>
void for_paths(std::size_t n, const EnsembleOptions& opt, Body&& body) {
  if (opt.exec == Exec::Serial) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const int nt = opt.threads > 0 ? opt.threads : omp_get_max_threads();
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 16) num_threads(nt)
  for (std::ptrdiff_t i = 0; i < count; ++i) body(static_cast<std::size_t>(i));
}

EnsembleStats reduce(const std::vector<PathCounters>& counters) {
  EnsembleStats s;
  std::uint64_t zeros = 0;
  for (const auto& c : counters) {
    s.steps += c.steps;
    zeros += c.zeros;
    s.clamps += c.clamps;
    s.aborted += c.aborted ? 1 : 0;
  }
  s.zero_fraction = s.steps > 0 ? static_cast<double>(zeros) / static_cast<double>(s.steps) : 0.0;
  return s;
}

void check_common(std::span<const double> times, const StepPolicy& policy, const EnsembleOptions& opt,
                  const char* who) {
  if (opt.size == 0) throw std::invalid_argument(std::string(who) + ": ensemble size must be >= 1");
  if (times.empty()) throw std::invalid_argument(std::string(who) + ": need at least one time");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!std::isfinite(times[k]) || times[k] < 0.0 || (k > 0 && !(times[k] > times[k - 1]))) {
      throw std::invalid_argument(std::string(who) + ": times must be finite, >= 0 and increasing");
    }
  }
  policy.validate();
}

}  // namespace

InitialLaw InitialLaw::fixed(double x0) {
  if (!(x0 >= 0.0) || !std::isfinite(x0)) throw std::invalid_argument("initial state must be finite and >= 0");
  InitialLaw law;
  law.points_ = {x0};
  return law;
}

InitialLaw InitialLaw::cycle(std::vector<double> points) {
  if (points.empty()) throw std::invalid_argument("initial point list must be nonempty");
  for (double x : points) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("initial states must be finite and >= 0");
  }
  InitialLaw law;
  law.kind_ = Kind::Cycle;
  law.points_ = std::move(points);
  return law;
}

InitialLaw InitialLaw::stationary(const TargetDensity& d) {
  InitialLaw law;
  law.kind_ = Kind::Stationary;
  law.density_ = d;
  return law;
}

double InitialLaw::sample(std::size_t i, std::uint64_t seed) const {
  switch (kind_) {
    case Kind::Fixed: return points_.front();
    case Kind::Cycle: return points_[i % points_.size()];
    case Kind::Stationary: {
      RngStream rng(derive_seed(seed, kInitialLawTag), i);
      return density_->quantile(rng.uniform());
    }
  }
  return 0.0;
}

std::string InitialLaw::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case Kind::Fixed: os << "fixed(" << points_.front() << ")"; break;
    case Kind::Cycle:
      os << "cycle(";
      for (std::size_t k = 0; k < points_.size(); ++k) os << (k ? " " : "") << points_[k];
      os << ")";
      break;
    case Kind::Stationary: os << "stationary"; break;
  }
  return os.str();
}

CheckpointStates checkpoint_states(const ProcessSpec& spec, const InitialLaw& init, std::span<const double> checkpoints,
                                   const StepPolicy& policy, const EnsembleOptions& opt) {
  check_common(checkpoints, policy, opt, "checkpoint_states");
  const std::size_t n = opt.size;
  CheckpointStates out;
  out.checkpoints.assign(checkpoints.begin(), checkpoints.end());
  out.states.assign(checkpoints.size(), std::vector<double>(n, kNaN));
  std::vector<PathCounters> counters(n);

  for_paths(n, opt, [&](std::size_t i) {
    RngStream rng(opt.seed, i, opt.normal);
    detail::Walker w{init.sample(i, opt.seed)};
    detail::StepInfo info;
    PathCounters& pc = counters[i];
    double t = 0.0;
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      const double target = checkpoints[c];
      while (t < target) {
        if (detail::advance(spec, policy, w, target - t, rng, info) != detail::StepStatus::Ok) {
          pc.aborted = true;
          break;
        }
        t = (info.h == target - t) ? target : t + info.h;
        ++pc.steps;
        if (w.x == 0.0) ++pc.zeros;
      }
      if (pc.aborted) break;
      out.states[c][i] = w.x;
    }
    pc.clamps = w.clamps;
  });
  out.stats = reduce(counters);
  return out;
}

CheckpointStates time_changed_states(const ProcessSpec& langevin, const SpeedFunction& sf, const InitialLaw& init,
                                     std::span<const double> checkpoints, const StepPolicy& policy,
                                     const EnsembleOptions& opt, double y_horizon) {
  check_common(checkpoints, policy, opt, "time_changed_states");
  if (!(y_horizon > 0.0)) throw std::invalid_argument("time_changed_states: y_horizon must be > 0");
  const std::size_t n = opt.size;
  CheckpointStates out;
  out.checkpoints.assign(checkpoints.begin(), checkpoints.end());
  out.states.assign(checkpoints.size(), std::vector<double>(n, kNaN));
  std::vector<PathCounters> counters(n);

  for_paths(n, opt, [&](std::size_t i) {
    RngStream rng(opt.seed, i, opt.normal);
    detail::Walker w{init.sample(i, opt.seed)};
    detail::StepInfo info;
    PathCounters& pc = counters[i];
    double t = 0.0;
    double chi = 0.0;
    double inv_prev = 1.0 / sf(w.x);
    std::size_t c = 0;
    while (c < checkpoints.size() && checkpoints[c] <= 0.0) out.states[c++][i] = w.x;
    while (c < checkpoints.size()) {
      if (t >= y_horizon ||
          detail::advance(langevin, policy, w, y_horizon - t, rng, info) != detail::StepStatus::Ok) {
        pc.aborted = true;
        break;
      }
      t += info.h;
      ++pc.steps;
      if (w.x == 0.0) ++pc.zeros;
      const double inv = 1.0 / sf(w.x);
      const double chi_next = chi + 0.5 * info.h * (inv_prev + inv);
      while (c < checkpoints.size() && checkpoints[c] <= chi_next) {
        const double frac = (checkpoints[c] - chi) / (chi_next - chi);
        out.states[c++][i] = info.x_prev + frac * (w.x - info.x_prev);
      }
      chi = chi_next;
      inv_prev = inv;
    }
    pc.clamps = w.clamps;
  });
  out.stats = reduce(counters);
  return out;
}

HittingSample hitting_times(const ProcessSpec& spec, const InitialLaw& init, double K, double horizon,
                            const StepPolicy& policy, const EnsembleOptions& opt, bool bridge) {
  if (!(K >= 0.0) || !std::isfinite(K)) throw std::invalid_argument("hitting_times: K must be finite and >= 0");
  const double h_arr[1] = {horizon};
  check_common(h_arr, policy, opt, "hitting_times");
  if (!(horizon > 0.0)) throw std::invalid_argument("hitting_times: horizon must be > 0");
  const std::size_t n = opt.size;
  HittingSample out;
  out.K = K;
  out.horizon = horizon;
  out.times.assign(n, horizon);
  out.censored.assign(n, 1);
  std::vector<PathCounters> counters(n);

  for_paths(n, opt, [&](std::size_t i) {
    RngStream rng(opt.seed, i, opt.normal);
    detail::Walker w{init.sample(i, opt.seed)};
    detail::StepInfo info;
    PathCounters& pc = counters[i];
    if (w.x <= K) {
      out.times[i] = 0.0;
      out.censored[i] = 0;
      return;
    }
    double t = 0.0;
    while (t < horizon) {
      const double lt_before = w.local_time;
      if (detail::advance(spec, policy, w, horizon - t, rng, info) != detail::StepStatus::Ok) {
        pc.aborted = true;
        break;
      }
      ++pc.steps;
      if (w.x <= K || w.local_time > lt_before) {
        out.times[i] = t + info.h;
        out.censored[i] = 0;
        break;
      }
      if (bridge && info.sigma > 0.0) {
        const double e = 2.0 * (info.x_prev - K) * (w.x - K) / (info.sigma * info.sigma * info.h);
        if (e < 40.0 && rng.uniform() < std::exp(-e)) {
          out.times[i] = t + 0.5 * info.h;
          out.censored[i] = 0;
          break;
        }
      }
      t = (info.h == horizon - t) ? horizon : t + info.h;
    }
    pc.clamps = w.clamps;
  });
  for (char c : out.censored) out.censored_count += c ? 1 : 0;
  out.stats = reduce(counters);
  return out;
}

TimeAverages time_averages(const ProcessSpec& spec, const InitialLaw& init, const RealFn& g, std::span<const double> T,
                           const StepPolicy& policy, const EnsembleOptions& opt) {
  check_common(T, policy, opt, "time_averages");
  if (!(T.front() > 0.0)) throw std::invalid_argument("time_averages: horizons must be > 0");
  const std::size_t n = opt.size;
  TimeAverages out;
  out.T.assign(T.begin(), T.end());
  out.averages.assign(T.size(), std::vector<double>(n, kNaN));
  std::vector<PathCounters> counters(n);

  for_paths(n, opt, [&](std::size_t i) {
    RngStream rng(opt.seed, i, opt.normal);
    detail::Walker w{init.sample(i, opt.seed)};
    detail::StepInfo info;
    PathCounters& pc = counters[i];
    double t = 0.0;
    long double integral = 0.0L;
    double g_prev = g(w.x);
    for (std::size_t j = 0; j < T.size(); ++j) {
      while (t < T[j]) {
        if (detail::advance(spec, policy, w, T[j] - t, rng, info) != detail::StepStatus::Ok) {
          pc.aborted = true;
          break;
        }
        t = (info.h == T[j] - t) ? T[j] : t + info.h;
        ++pc.steps;
        if (w.x == 0.0) ++pc.zeros;
        const double gx = g(w.x);
        integral += 0.5 * info.h * (g_prev + gx);
        g_prev = gx;
      }
      if (pc.aborted) break;
      out.averages[j][i] = static_cast<double>(integral / T[j]);
    }
    pc.clamps = w.clamps;
  });
  out.stats = reduce(counters);
  return out;
}

}  // namespace htd
