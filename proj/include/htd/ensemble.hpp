#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "htd/sde.hpp"

namespace htd {

/// How the kernels below distribute paths. Both modes give bit-identical results:
/// path i always draws from stream (seed, i) and results are stored by index.
enum class Exec { Serial, Parallel };

struct EnsembleOptions {
  std::size_t size = 1000;
  std::uint64_t seed = 0;
  NormalMethod normal = NormalMethod::Polar;
  Exec exec = Exec::Parallel;
  /// OpenMP thread count; 0 keeps the runtime default.
  int threads = 0;
};

/// Initial state of path i.
class InitialLaw {
 public:
  static InitialLaw fixed(double x0);
  /// Path i starts at points[i mod n].
  static InitialLaw cycle(std::vector<double> points);
  /// Inverse-cdf sample from the density, using a stream separate from the path's noise.
  static InitialLaw stationary(const TargetDensity& d);

  double sample(std::size_t i, std::uint64_t seed) const;
  std::string describe() const;

 private:
  enum class Kind { Fixed, Cycle, Stationary } kind_ = Kind::Fixed;
  std::vector<double> points_{0.0};
  std::optional<TargetDensity> density_;
};

struct EnsembleStats {
  std::size_t aborted = 0;        // overflow or step underflow
  std::size_t clamps = 0;
  std::uint64_t steps = 0;
  double zero_fraction = 0.0;     // fraction of steps ending exactly at 0
};

/// states[c][i]: state of path i at checkpoint c. Aborted paths hold NaN from the
/// abort onwards.
struct CheckpointStates {
  std::vector<double> checkpoints;
  std::vector<std::vector<double>> states;
  EnsembleStats stats;
};

/// Simulates the ensemble and records states at the (increasing, >= 0) checkpoints.
/// Steps are clipped to land on every checkpoint.
CheckpointStates checkpoint_states(const ProcessSpec& spec, const InitialLaw& init, std::span<const double> checkpoints,
                                   const StepPolicy& policy, const EnsembleOptions& opt);

/// Accelerated states obtained as Y_{beta_s}: each Langevin path runs until chi passes
/// the last checkpoint, the state at each checkpoint is interpolated linearly in chi.
/// A path whose Langevin time exceeds `y_horizon` counts as aborted.
CheckpointStates time_changed_states(const ProcessSpec& langevin, const SpeedFunction& sf, const InitialLaw& init,
                                     std::span<const double> checkpoints, const StepPolicy& policy,
                                     const EnsembleOptions& opt, double y_horizon = 1e7);

struct HittingSample {
  double K = 0.0;
  double horizon = 0.0;
  std::vector<double> times;      // hitting time, or horizon when censored
  std::vector<char> censored;
  std::size_t censored_count = 0;
  EnsembleStats stats;
};

/// First time the state is <= K. With `bridge` set, each step between two points above
/// K also counts as a hit with the Brownian-bridge crossing probability
/// exp(-2 (x_n - K)(x_{n+1} - K) / (sigma^2 h)), timed at the step midpoint.
HittingSample hitting_times(const ProcessSpec& spec, const InitialLaw& init, double K, double horizon,
                            const StepPolicy& policy, const EnsembleOptions& opt, bool bridge = true);

/// averages[j][i] = (1 / T_j) int_0^{T_j} g(X_s) ds for path i, by trapezoid.
struct TimeAverages {
  std::vector<double> T;
  std::vector<std::vector<double>> averages;
  EnsembleStats stats;
};

TimeAverages time_averages(const ProcessSpec& spec, const InitialLaw& init, const RealFn& g, std::span<const double> T,
                           const StepPolicy& policy, const EnsembleOptions& opt);

}  // namespace htd
