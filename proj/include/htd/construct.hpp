#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "htd/density.hpp"

namespace htd {

struct SpeedOptions {
  /// Ratio of the geometric grid behind the cumulative 1/pi table.
  double table_ratio = 1.002;
  /// Evaluate F through the model's closed form when it has one.
  bool use_closed_form = true;
  /// Shrink factor applied to a grid-scanned envelope constant.
  double margin = 0.99;
};

/// Speed function F(z) = c1 + c2 int_0^z dy / pi(y), i.e. f^2 of the accelerated
/// process. Immutable; the cumulative table is built eagerly.
class SpeedFunction {
 public:
  /// F(z); closed form when available, otherwise the cached table.
  double operator()(double z) const;
  /// F(z) through the cached table only (with power-law extension past x_cut).
  double cached(double z) const;
  /// F'(z) = c2 / pi(z), exact.
  double derivative(double z) const;

  double c1() const;
  double c2() const;
  /// Envelope constant: a (1 + z)^(m+1) <= F(z) <= (1 + z)^(m+1) / a.
  double a() const;
  /// The conservative choice c^2 from the density envelope constant.
  double a_conservative() const;
  bool uses_closed_form() const;

  /// F == value everywhere; the identity time change.
  static SpeedFunction constant(double value);

  struct Impl;

 private:
  friend SpeedFunction speed_function(const TargetDensity&, double, double, const SpeedOptions&);
  explicit SpeedFunction(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

SpeedFunction speed_function(const TargetDensity& d, double c1 = 1.0, double c2 = 1.0,
                             const SpeedOptions& options = {});

/// Coefficients of the affine mean-reverting diffusion dZ = -(Z - mu) dt + sqrt(2 v(Z)) dW.
class MeanRevertingCoefficients {
 public:
  double mu() const;
  /// v(z) = pi(z)^-1 int_0^z (mu - s) pi(s) ds.
  double v(double z) const;

  struct Impl;

 private:
  friend MeanRevertingCoefficients mean_reverting_coefficients(const TargetDensity&);
  explicit MeanRevertingCoefficients(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

/// Throws NumericalError if v comes out negative beyond 1e-12 anywhere on its table.
MeanRevertingCoefficients mean_reverting_coefficients(const TargetDensity& d);

enum class ProcessKind { LangevinY, AcceleratedX, MeanRevertingZ, Custom };

/// How a step that lands below zero is brought back.
enum class Reflection {
  Absolute,    // x <- |x|
  Projection,  // x <- max(0, x)
  Clamp,       // as Projection, but counted as a safeguard event
};

const char* to_string(ProcessKind kind);

struct Coefficients {
  double drift = 0.0;
  double sigma = 0.0;
  /// Time-change speed: F(x) for AcceleratedX, 1 otherwise.
  double speed = 1.0;
};

class ProcessSpec {
 public:
  ProcessKind kind() const { return kind_; }
  Reflection reflection() const { return reflection_; }
  ProcessSpec with_reflection(Reflection r) const;

  Coefficients at(double x) const;
  double drift(double x) const { return at(x).drift; }
  double sigma(double x) const { return at(x).sigma; }
  /// The density this process is meant to leave invariant.
  double target_pdf(double x) const;

  const TargetDensity* density() const { return density_ ? &*density_ : nullptr; }
  const SpeedFunction* speed_function() const { return speed_ ? &*speed_ : nullptr; }
  const MeanRevertingCoefficients* mean_reverting() const { return mean_reverting_ ? &*mean_reverting_ : nullptr; }

 private:
  friend ProcessSpec langevin_spec(const TargetDensity&);
  friend ProcessSpec accelerated_spec(const TargetDensity&, const SpeedFunction&);
  friend ProcessSpec mean_reverting_spec(const TargetDensity&, const MeanRevertingCoefficients&);
  friend ProcessSpec custom_spec(RealFn, RealFn, RealFn);

  ProcessKind kind_ = ProcessKind::Custom;
  Reflection reflection_ = Reflection::Absolute;
  std::optional<TargetDensity> density_;
  std::optional<SpeedFunction> speed_;
  std::optional<MeanRevertingCoefficients> mean_reverting_;
  RealFn custom_drift_, custom_sigma_, custom_pdf_;
};

/// dY = b(Y) dt + dW with reflection, b = (ln pi)' / 2.
ProcessSpec langevin_spec(const TargetDensity& d);
/// dX = F(X) b(X) dt + sqrt(F(X)) dW with reflection.
ProcessSpec accelerated_spec(const TargetDensity& d, const SpeedFunction& sf);
/// dZ = -(Z - mu) dt + sqrt(2 v(Z)) dW, clamped at zero.
ProcessSpec mean_reverting_spec(const TargetDensity& d, const MeanRevertingCoefficients& bc);
/// Arbitrary coefficients; `pdf` is only needed for stationarity checks.
ProcessSpec custom_spec(RealFn drift, RealFn sigma, RealFn pdf = nullptr);

/// b(x) = (ln pi)'(x) / 2.
double drift_b(const TargetDensity& d, double x);

/// max over the grid of |F'(x) pi(x) - c2| with F' taken by finite differences of
/// the cached table (right-sided at zero).
double key_identity_residual(const TargetDensity& d, const SpeedFunction& sf, std::span<const double> grid);

struct StationarityResidual {
  double max_abs = 0.0;
  /// Residual divided by |sigma^2 pi| / (2 (1 + x)^2) + |drift pi| / (1 + x), the size of
  /// the differentiated products on their natural length scale.
  double max_rel = 0.0;
};

/// max over the grid of |(sigma^2 pi)'' / 2 - (drift pi)'|, by 4th-order finite differences.
StationarityResidual stationarity_residual(const ProcessSpec& spec, std::span<const double> grid);

/// Probability flux sigma^2(0) pi'(0) / 2 + (sigma^2)'(0) pi(0) / 2 - drift(0) pi(0) at the
/// reflecting boundary, by one-sided differences. A reflected process leaves pi
/// invariant only if this vanishes; for the accelerated process it equals c2 / 2.
double boundary_flux(const ProcessSpec& spec, double h = 1e-4);

struct MixingExponent {
  double r = 0.0;               // -min x b(x) over the top decade of probes
  std::vector<double> x_b;      // x b(x) at every probe
};

/// Diagnostic estimate of r = -liminf x b(x). Probes must be increasing and reach 1e3.
MixingExponent mixing_exponent_r(const TargetDensity& d, std::span<const double> probes);

}  // namespace htd
