#include "htd/construct.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace htd {

// ---------------------------------------------------------------------------
// Speed function

struct SpeedFunction::Impl {
  std::optional<TargetDensity> density;
  double c1 = 1.0;
  double c2 = 1.0;
  double m = 0.0;
  double a = 1.0;
  double a_conservative = 1.0;
  bool closed = false;
  double x_cut = 0.0;
  double integral_at_cut = 0.0;   // int_0^x_cut dy / pi
  double inv_pdf_at_cut = 0.0;    // 1 / pi(x_cut)
  HermiteTable integral;          // int_0^z dy / pi on [0, x_cut]

  double cached_integral(double z) const {
    if (z <= x_cut) return integral(z);
    const double u = 1.0 + x_cut;
    return integral_at_cut + u * inv_pdf_at_cut / (m + 1.0) * std::expm1((m + 1.0) * std::log((1.0 + z) / u));
  }
};

SpeedFunction speed_function(const TargetDensity& d, double c1, double c2, const SpeedOptions& options) {
  if (!(c1 > 0.0) || !(c2 > 0.0) || !std::isfinite(c1) || !std::isfinite(c2)) {
    throw std::invalid_argument("speed_function: c1 and c2 must be positive");
  }
  auto sf = std::make_shared<SpeedFunction::Impl>();
  sf->density = d;
  sf->c1 = c1;
  sf->c2 = c2;
  sf->m = d.tail_exponent();
  sf->x_cut = d.x_cut();
  sf->closed = options.use_closed_form && d.closed_forms().speed_integral;
  sf->integral = cumulative_table([&](double y) { return 1.0 / d.pdf(y); },
                                  [&](double y) { return -d.log_pdf_derivative(y) / d.pdf(y); }, sf->x_cut,
                                  options.table_ratio);
  sf->integral_at_cut = sf->integral.values().back();
  sf->inv_pdf_at_cut = 1.0 / d.pdf(sf->x_cut);
  if (!std::isfinite(sf->integral_at_cut)) throw NumericalError("speed_function: 1/pi integral overflowed");

  const double m = sf->m;
  // F / (1 + z)^(m+1) tends to c2 / ((m + 1) A) with A = lim pi (1 + z)^m.
  const double limit = c2 / ((m + 1.0) * d.tail_amplitude());
  // For the Pareto model F / (1 + z)^(m+1) is monotone between c1 and the limit.
  if (sf->closed && std::holds_alternative<ParetoShifted>(d.model())) {
    const double lo = std::min(c1, limit);
    const double hi = std::max(c1, limit);
    sf->a = std::min({lo, 1.0 / hi, 1.0});
  } else {
    double lo = limit, hi = limit;
    for (double z : sf->integral.nodes()) {
      const double r = (c1 + c2 * sf->integral(z)) * std::exp(-(m + 1.0) * std::log1p(z));
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    sf->a = options.margin * std::min({lo, 1.0 / hi, 1.0});
  }
  const double c = d.envelope_c();
  sf->a_conservative = c * c;
  return SpeedFunction(std::move(sf));
}

SpeedFunction SpeedFunction::constant(double value) {
  if (!(value > 0.0)) throw std::invalid_argument("SpeedFunction::constant: value must be positive");
  auto sf = std::make_shared<Impl>();
  sf->c1 = value;
  sf->c2 = 0.0;
  sf->closed = true;
  sf->a = std::min({value, 1.0 / value, 1.0});
  sf->a_conservative = sf->a;
  return SpeedFunction(std::move(sf));
}

double SpeedFunction::operator()(double z) const {
  const auto& s = *impl_;
  if (!s.density) return s.c1;
  if (s.closed) return s.c1 + s.c2 * s.density->closed_speed_integral(z);
  return s.c1 + s.c2 * s.cached_integral(z);
}

double SpeedFunction::cached(double z) const {
  const auto& s = *impl_;
  if (!s.density) return s.c1;
  return s.c1 + s.c2 * s.cached_integral(z);
}

double SpeedFunction::derivative(double z) const {
  const auto& s = *impl_;
  if (!s.density) return 0.0;
  return s.c2 / s.density->pdf(z);
}

double SpeedFunction::c1() const { return impl_->c1; }
double SpeedFunction::c2() const { return impl_->c2; }
double SpeedFunction::a() const { return impl_->a; }
double SpeedFunction::a_conservative() const { return impl_->a_conservative; }
bool SpeedFunction::uses_closed_form() const { return impl_->closed; }

// ---------------------------------------------------------------------------
// mean-reverting coefficients

struct MeanRevertingCoefficients::Impl {
  std::optional<TargetDensity> density;
  double mu = 0.0;
  double m = 0.0;
  bool closed = false;
  double x_cut = 0.0;
  double amplitude = 0.0;
  HermiteTable below;  // int_0^z (mu - s) pi ds, used for z <= mu
  HermiteTable above;  // int_z^inf (s - mu) pi ds, used for z > mu

  // Both branches integrate a non-negative integrand, so J >= 0 by construction.
  double flux(double z) const {
    if (z <= mu) return below(z);
    if (z <= x_cut) return above(z);
    return tail_flux(z);
  }

  double tail_flux(double z) const {
    const double u = 1.0 + z;
    return amplitude * (std::pow(u, 2.0 - m) / (m - 2.0) - (1.0 + mu) * std::pow(u, 1.0 - m) / (m - 1.0));
  }
};

MeanRevertingCoefficients mean_reverting_coefficients(const TargetDensity& d) {
  auto bc = std::make_shared<MeanRevertingCoefficients::Impl>();
  bc->density = d;
  bc->mu = d.mean();
  bc->m = d.tail_exponent();
  bc->x_cut = d.x_cut();
  bc->amplitude = d.tail_amplitude();
  bc->closed = std::holds_alternative<ParetoShifted>(d.model()) && d.closed_forms().mean;
  if (!std::isfinite(bc->mu)) throw NumericalError("mean_reverting_coefficients: mean is not finite");
  if (!bc->closed) {
    const double mu = bc->mu;
    const double ratio = d.options().table_ratio;
    bc->below = cumulative_table([&](double s) { return (mu - s) * d.pdf(s); },
                                 [&](double s) { return -d.pdf(s) + (mu - s) * d.pdf_derivative(s); },
                                 bc->x_cut, ratio);
    bc->above = cumulative_table([&](double s) { return (s - mu) * d.pdf(s); },
                                 [&](double s) { return d.pdf(s) + (s - mu) * d.pdf_derivative(s); },
                                 bc->x_cut, ratio, Accumulate::Backward, bc->tail_flux(bc->x_cut));
    const MeanRevertingCoefficients probe{bc};
    for (double z : bc->below.nodes()) {
      if (probe.v(z) < -1e-12) {
        throw NumericalError("mean_reverting_coefficients: v(" + std::to_string(z) + ") is negative");
      }
    }
  }
  return MeanRevertingCoefficients(std::move(bc));
}

double MeanRevertingCoefficients::mu() const { return impl_->mu; }

double MeanRevertingCoefficients::v(double z) const {
  const auto& b = *impl_;
  if (z <= 0.0) return 0.0;
  if (b.closed) return z * (1.0 + z) / (b.m - 2.0);
  return b.flux(z) / b.density->pdf(z);
}

// ---------------------------------------------------------------------------
// Process specifications

const char* to_string(ProcessKind kind) {
  switch (kind) {
    case ProcessKind::LangevinY: return "langevin";
    case ProcessKind::AcceleratedX: return "accelerated";
    case ProcessKind::MeanRevertingZ: return "mean_reverting";
    case ProcessKind::Custom: return "custom";
  }
  return "?";
}

ProcessSpec ProcessSpec::with_reflection(Reflection r) const {
  ProcessSpec out = *this;
  out.reflection_ = r;
  return out;
}

Coefficients ProcessSpec::at(double x) const {
  switch (kind_) {
    case ProcessKind::LangevinY:
      return {0.5 * density_->log_pdf_derivative(x), 1.0, 1.0};
    case ProcessKind::AcceleratedX: {
      const double f2 = (*speed_)(x);
      return {f2 * 0.5 * density_->log_pdf_derivative(x), std::sqrt(f2), f2};
    }
    case ProcessKind::MeanRevertingZ:
      return {mean_reverting_->mu() - x, std::sqrt(2.0 * std::max(0.0, mean_reverting_->v(x))), 1.0};
    case ProcessKind::Custom:
      return {custom_drift_(x), custom_sigma_(x), 1.0};
  }
  return {};
}

double ProcessSpec::target_pdf(double x) const {
  if (density_) return density_->pdf(x);
  if (custom_pdf_) return custom_pdf_(x);
  throw std::logic_error("ProcessSpec: no target density attached");
}

ProcessSpec langevin_spec(const TargetDensity& d) {
  ProcessSpec p;
  p.kind_ = ProcessKind::LangevinY;
  p.density_ = d;
  return p;
}

ProcessSpec accelerated_spec(const TargetDensity& d, const SpeedFunction& sf) {
  ProcessSpec p;
  p.kind_ = ProcessKind::AcceleratedX;
  p.density_ = d;
  p.speed_ = sf;
  return p;
}

ProcessSpec mean_reverting_spec(const TargetDensity& d, const MeanRevertingCoefficients& bc) {
  ProcessSpec p;
  p.kind_ = ProcessKind::MeanRevertingZ;
  p.reflection_ = Reflection::Clamp;
  p.density_ = d;
  p.mean_reverting_ = bc;
  return p;
}

ProcessSpec custom_spec(RealFn drift, RealFn sigma, RealFn pdf) {
  ProcessSpec p;
  p.kind_ = ProcessKind::Custom;
  p.custom_drift_ = std::move(drift);
  p.custom_sigma_ = std::move(sigma);
  p.custom_pdf_ = std::move(pdf);
  return p;
}

double drift_b(const TargetDensity& d, double x) { return 0.5 * d.log_pdf_derivative(x); }

// ---------------------------------------------------------------------------
// Identity checks

namespace {

template <class F>
double first_derivative(const F& f, double x, double h) {
  if (x >= 2.0 * h) return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h);
  return (-25 * f(x) + 48 * f(x + h) - 36 * f(x + 2 * h) + 16 * f(x + 3 * h) - 3 * f(x + 4 * h)) / (12 * h);
}

template <class F>
double second_derivative(const F& f, double x, double h) {
  if (x >= 2.0 * h) {
    return (-f(x - 2 * h) + 16 * f(x - h) - 30 * f(x) + 16 * f(x + h) - f(x + 2 * h)) / (12 * h * h);
  }
  return (45 * f(x) - 154 * f(x + h) + 214 * f(x + 2 * h) - 156 * f(x + 3 * h) + 61 * f(x + 4 * h) -
          10 * f(x + 5 * h)) /
         (12 * h * h);
}

double local_step(std::span<const double> grid, std::size_t i, double rel) {
  double h = rel * (1.0 + grid[i]);
  if (grid.size() > 1) {
    const double left = i > 0 ? grid[i] - grid[i - 1] : std::numeric_limits<double>::infinity();
    const double right = i + 1 < grid.size() ? grid[i + 1] - grid[i] : std::numeric_limits<double>::infinity();
    h = std::min(h, 0.25 * std::min(left, right));
  }
  return h;
}

}  // namespace

double key_identity_residual(const TargetDensity& d, const SpeedFunction& sf, std::span<const double> grid) {
  auto F = [&](double z) { return sf.cached(z); };
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid[i];
    const double h = local_step(grid, i, 1e-3);
    const double r = std::abs(first_derivative(F, x, h) * d.pdf(x) - sf.c2());
    worst = std::max(worst, r);
  }
  return worst;
}

StationarityResidual stationarity_residual(const ProcessSpec& spec, std::span<const double> grid) {
  auto diffusion_flux = [&](double x) {
    const double s = spec.sigma(x);
    return s * s * spec.target_pdf(x);
  };
  auto drift_flux = [&](double x) { return spec.drift(x) * spec.target_pdf(x); };
  StationarityResidual out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid[i];
    const double h = local_step(grid, i, 1e-3);
    const double a = 0.5 * second_derivative(diffusion_flux, x, h);
    const double b = first_derivative(drift_flux, x, h);
    const double r = std::abs(a - b);
    // Magnitude of the differentiated products on their natural length scale 1 + x.
    const double len = 1.0 + x;
    const double scale = 0.5 * std::abs(diffusion_flux(x)) / (len * len) + std::abs(drift_flux(x)) / len;
    out.max_abs = std::max(out.max_abs, r);
    if (scale > 0.0) out.max_rel = std::max(out.max_rel, r / scale);
  }
  return out;
}

double boundary_flux(const ProcessSpec& spec, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("boundary_flux: h must be > 0");
  auto diffusion_flux = [&](double x) {
    const double s = spec.sigma(x);
    return s * s * spec.target_pdf(x);
  };
  return 0.5 * first_derivative(diffusion_flux, 0.0, h) - spec.drift(0.0) * spec.target_pdf(0.0);
}

MixingExponent mixing_exponent_r(const TargetDensity& d, std::span<const double> probes) {
  if (probes.empty() || probes.back() < 1e3) {
    throw std::invalid_argument("mixing_exponent_r: probes must reach at least 1e3");
  }
  for (std::size_t i = 1; i < probes.size(); ++i) {
    if (!(probes[i] > probes[i - 1])) throw std::invalid_argument("mixing_exponent_r: probes must increase");
  }
  MixingExponent out;
  out.x_b.reserve(probes.size());
  double lowest = std::numeric_limits<double>::infinity();
  const double top_decade = probes.back() / 10.0;
  for (double x : probes) {
    const double v = x * drift_b(d, x);
    out.x_b.push_back(v);
    if (x >= top_decade) lowest = std::min(lowest, v);
  }
  out.r = -lowest;
  return out;
}

}  // namespace htd
