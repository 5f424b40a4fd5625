#pragma once

#include <memory>
#include <span>
#include <string>
#include <variant>

#include "htd/numerics.hpp"

namespace htd {

/// pi(x) = (m - 1) (1 + x)^-m.
struct ParetoShifted {
  double m = 5.0;
};

/// pi(x) proportional to (1 + (x / s)^2)^(-m/2) on x >= 0.
struct HalfStudentLike {
  double m = 4.0;
  double s = 1.0;
};

/// ParetoShifted modulated by 1 + eps sin(x) / (1 + x), renormalized.
struct PerturbedPareto {
  double m = 5.0;
  double eps = 0.3;
};

using DensityModel = std::variant<ParetoShifted, HalfStudentLike, PerturbedPareto>;

std::string describe(const DensityModel& model);

struct DensityOptions {
  /// Use analytic normalization, mean, cdf and speed integral where the model has them.
  bool use_closed_forms = true;
  /// Beyond this point tail integrals are completed with the power-law envelope.
  double x_cut = 1e4;
  /// Ratio of the geometric grid backing numeric cdf tables.
  double table_ratio = 1.002;
};

/// Which quantities a model provides in closed form.
struct ClosedForms {
  bool normalization = false;
  bool speed_integral = false;  // int_0^z dy / pi(y)
  bool mean = false;
  bool cdf = false;
};

/// Heavy-tailed target density on the half-line. Immutable; copies share state.
class TargetDensity {
 public:
  double pdf(double x) const;
  double log_pdf_derivative(double x) const;
  double pdf_derivative(double x) const { return pdf(x) * log_pdf_derivative(x); }

  double tail_exponent() const;
  double envelope_c() const;
  /// Constant Z with pi = u / Z for the model's unnormalized shape u.
  double normalization() const;
  /// Estimate of lim pi(x) (1 + x)^m, taken at x_cut.
  double tail_amplitude() const;
  double x_cut() const;

  double mean() const;
  double cdf(double z) const;
  double quantile(double p) const;

  /// int_0^z dy / pi(y) when the model has it in closed form; NaN otherwise.
  double closed_speed_integral(double z) const;

  const ClosedForms& closed_forms() const;
  const DensityModel& model() const;
  const DensityOptions& options() const;

  struct Impl;

 private:
  friend TargetDensity make_density(const DensityModel&, const DensityOptions&);
  explicit TargetDensity(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

/// Builds a normalized density. Throws std::invalid_argument for m <= 3, s <= 0,
/// |eps| >= 1/2 or non-finite parameters.
TargetDensity make_density(const DensityModel& model, const DensityOptions& options = {});

struct EnvelopeCheck {
  double c_low = 0.0;   // min pi(x) (1 + x)^m over the grid
  double c_high = 0.0;  // max pi(x) (1 + x)^m over the grid
  bool pass = false;    // c_low >= c and c_high <= 1 / c
};

EnvelopeCheck verify_envelope(const TargetDensity& d, std::span<const double> grid);

}  // namespace htd
