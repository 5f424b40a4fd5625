#include "htd/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>

namespace htd {

enum class ModelKind { Pareto, HalfStudent, Perturbed };

struct TargetDensity::Impl {
  DensityModel model;
  DensityOptions options;
  ClosedForms closed;
  ModelKind kind = ModelKind::Pareto;
  double m = 0.0;
  double s = 1.0;
  double eps = 0.0;
  double norm = 1.0;       // Z
  double inv_norm = 1.0;   // 1 / Z
  double c = 0.0;
  double amplitude = 0.0;  // pi(x_cut) (1 + x_cut)^m
  double mean = 0.0;
  double tail_mass = 0.0;  // 1 - F(x_cut)
  HermiteTable cdf_table;  // numeric cdf on [0, x_cut]

  double unnormalized(double x) const {
    switch (kind) {
      case ModelKind::Pareto:
        return std::exp(-m * std::log1p(x));
      case ModelKind::HalfStudent: {
        const double r = x / s;
        return std::exp(-0.5 * m * std::log1p(r * r));
      }
      case ModelKind::Perturbed:
        return std::exp(-m * std::log1p(x)) * (1.0 + eps * std::sin(x) / (1.0 + x));
    }
    return 0.0;
  }

  double log_derivative(double x) const {
    switch (kind) {
      case ModelKind::Pareto:
        return -m / (1.0 + x);
      case ModelKind::HalfStudent:
        return -m * x / (s * s + x * x);
      case ModelKind::Perturbed: {
        const double u = 1.0 + x;
        const double mod = 1.0 + eps * std::sin(x) / u;
        const double dmod = eps * (std::cos(x) / u - std::sin(x) / (u * u));
        return -m / u + dmod / mod;
      }
    }
    return 0.0;
  }

  double pdf(double x) const { return unnormalized(x) * inv_norm; }
};

namespace {

void validate(const DensityModel& model) {
  auto check_m = [](double m) {
    if (!std::isfinite(m) || !(m > 3.0)) {
      throw std::invalid_argument("tail exponent m must satisfy m > 3 (got " + std::to_string(m) + ")");
    }
  };
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        check_m(p.m);
        if constexpr (std::is_same_v<T, HalfStudentLike>) {
          if (!std::isfinite(p.s) || !(p.s > 0.0)) throw std::invalid_argument("scale s must be > 0");
        } else if constexpr (std::is_same_v<T, PerturbedPareto>) {
          if (!std::isfinite(p.eps) || !(std::abs(p.eps) < 0.5)) {
            throw std::invalid_argument("perturbation eps must satisfy |eps| < 1/2");
          }
        }
      },
      model);
}

// Normalization by quadrature on [0, x_cut] plus the power-law tail matched at x_cut.
double numeric_normalization(const TargetDensity::Impl& d) {
  const double xc = d.options.x_cut;
  const double body = quad::adaptive_geometric([&](double x) { return d.unnormalized(x); }, 0.0, xc, 1e-13);
  const double tail = d.unnormalized(xc) * (1.0 + xc) / (d.m - 1.0);
  return body + tail;
}

double scan_envelope_constant(const TargetDensity::Impl& d) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  auto visit = [&](double x) {
    const double r = d.pdf(x) * std::exp(d.m * std::log1p(x));
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  };
  for (int i = 0; i <= 2000; ++i) visit(0.005 * i);  // [0, 10] with spacing 0.005
  for (double x : geometric_grid(10.0, d.options.x_cut, 1.0005)) visit(x);
  lo = std::min(lo, d.amplitude);
  hi = std::max(hi, d.amplitude);
  return 0.99 * std::min({lo, 1.0 / hi, 1.0});
}

}  // namespace

std::string describe(const DensityModel& model) {
  std::ostringstream os;
  os.precision(17);
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ParetoShifted>) {
          os << "pareto(m=" << p.m << ")";
        } else if constexpr (std::is_same_v<T, HalfStudentLike>) {
          os << "half_student(m=" << p.m << ",s=" << p.s << ")";
        } else {
          os << "perturbed_pareto(m=" << p.m << ",eps=" << p.eps << ")";
        }
      },
      model);
  return os.str();
}

TargetDensity make_density(const DensityModel& model, const DensityOptions& options) {
  validate(model);
  if (!(options.x_cut > 10.0) || !(options.table_ratio > 1.0)) {
    throw std::invalid_argument("density options: need x_cut > 10 and table_ratio > 1");
  }
  auto d = std::make_shared<TargetDensity::Impl>();
  d->model = model;
  d->options = options;
  const bool closed = options.use_closed_forms;

  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        d->m = p.m;
        if constexpr (std::is_same_v<T, ParetoShifted>) {
          d->kind = ModelKind::Pareto;
          d->closed = {closed, closed, closed, closed};
          if (closed) d->norm = 1.0 / (p.m - 1.0);
        } else if constexpr (std::is_same_v<T, HalfStudentLike>) {
          d->kind = ModelKind::HalfStudent;
          d->s = p.s;
          // 1 / pi is a polynomial when m is an even integer.
          const bool even = p.m == 2.0 * std::round(0.5 * p.m) && p.m <= 64.0;
          d->closed = {closed, closed && even, closed, closed};
          if (closed) {
            d->norm = p.s * std::sqrt(std::numbers::pi) *
                      std::exp(std::lgamma(0.5 * (p.m - 1.0)) - std::lgamma(0.5 * p.m)) / 2.0;
          }
        } else {
          d->kind = ModelKind::Perturbed;
          d->eps = p.eps;
        }
      },
      model);

  if (!d->closed.normalization) d->norm = numeric_normalization(*d);
  d->inv_norm = 1.0 / d->norm;

  const double xc = options.x_cut;
  d->amplitude = d->pdf(xc) * std::exp(d->m * std::log1p(xc));

  if (d->kind == ModelKind::Pareto && closed) {
    d->c = 1.0 / (d->m - 1.0);
  } else {
    d->c = scan_envelope_constant(*d);
  }

  // Numeric cdf table: always built, it also backs quantiles of non-closed models.
  const auto& impl = *d;
  d->cdf_table = cumulative_table([&](double x) { return impl.pdf(x); },
                                  [&](double x) { return impl.pdf(x) * impl.log_derivative(x); }, xc,
                                  options.table_ratio);
  d->tail_mass = d->pdf(xc) * (1.0 + xc) / (d->m - 1.0);

  if (d->closed.mean) {
    if (d->kind == ModelKind::Pareto) {
      d->mean = 1.0 / (d->m - 2.0);
    } else {
      d->mean = d->s * d->s / ((d->m - 2.0) * d->norm);
    }
  } else {
    const double body = quad::adaptive_geometric([&](double x) { return x * impl.pdf(x); }, 0.0, xc, 1e-13);
    const double u = 1.0 + xc;
    const double a = d->amplitude;
    const double tail = a * (std::pow(u, 2.0 - d->m) / (d->m - 2.0) - std::pow(u, 1.0 - d->m) / (d->m - 1.0));
    d->mean = body + tail;
  }
  return TargetDensity(std::move(d));
}

double TargetDensity::pdf(double x) const { return impl_->pdf(x); }
double TargetDensity::log_pdf_derivative(double x) const { return impl_->log_derivative(x); }
double TargetDensity::tail_exponent() const { return impl_->m; }
double TargetDensity::envelope_c() const { return impl_->c; }
double TargetDensity::normalization() const { return impl_->norm; }
double TargetDensity::tail_amplitude() const { return impl_->amplitude; }
double TargetDensity::x_cut() const { return impl_->options.x_cut; }
double TargetDensity::mean() const { return impl_->mean; }
const ClosedForms& TargetDensity::closed_forms() const { return impl_->closed; }
const DensityModel& TargetDensity::model() const { return impl_->model; }
const DensityOptions& TargetDensity::options() const { return impl_->options; }

double TargetDensity::closed_speed_integral(double z) const {
  const auto& d = *impl_;
  if (!d.closed.speed_integral) return std::numeric_limits<double>::quiet_NaN();
  if (d.kind == ModelKind::HalfStudent) {
    // Z int_0^z (1 + (y/s)^2)^k dy = Z sum_j binom(k, j) z^(2j+1) / ((2j + 1) s^(2j)), k = m / 2.
    const int k = static_cast<int>(std::lround(0.5 * d.m));
    const double u = z / d.s;
    double sum = 0.0, binom = 1.0, power = u;
    for (int j = 0; j <= k; ++j) {
      sum += binom * power / (2.0 * j + 1.0);
      binom = binom * (k - j) / (j + 1.0);
      power *= u * u;
    }
    return d.norm * d.s * sum;
  }
  // ((1 + z)^(m+1) - 1) / ((m - 1)(m + 1))
  return std::expm1((d.m + 1.0) * std::log1p(z)) / ((d.m - 1.0) * (d.m + 1.0));
}

double TargetDensity::cdf(double z) const {
  const auto& d = *impl_;
  if (z <= 0.0) return 0.0;
  if (d.closed.cdf) {
    if (d.kind == ModelKind::Pareto) return -std::expm1((1.0 - d.m) * std::log1p(z));
    const double r = z / d.s;
    return boost::math::ibeta(0.5, 0.5 * (d.m - 1.0), r * r / (1.0 + r * r));
  }
  if (z <= d.options.x_cut) return d.cdf_table(z);
  const double ratio = (1.0 + z) / (1.0 + d.options.x_cut);
  return 1.0 - d.tail_mass * std::pow(ratio, 1.0 - d.m);
}

double TargetDensity::quantile(double p) const {
  const auto& d = *impl_;
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("quantile: p must lie in [0, 1)");
  if (p == 0.0) return 0.0;
  if (d.closed.cdf) {
    if (d.kind == ModelKind::Pareto) return std::expm1(-std::log1p(-p) / (d.m - 1.0));
    const double t = boost::math::ibeta_inv(0.5, 0.5 * (d.m - 1.0), p);
    return d.s * std::sqrt(t / (1.0 - t));
  }
  const auto& values = d.cdf_table.values();
  if (p >= values.back()) {
    const double tail = 1.0 - p;
    return (1.0 + d.options.x_cut) * std::pow(tail / d.tail_mass, 1.0 / (1.0 - d.m)) - 1.0;
  }
  const auto& nodes = d.cdf_table.nodes();
  const auto it = std::upper_bound(values.begin(), values.end(), p);
  const std::size_t k = static_cast<std::size_t>(it - values.begin()) - 1;
  double lo = nodes[k], hi = nodes[k + 1];
  double z = 0.5 * (lo + hi);
  for (int iter = 0; iter < 60; ++iter) {
    const double f = d.cdf_table(z) - p;
    if (f > 0.0) hi = z; else lo = z;
    const double step = f / d.pdf(z);
    double next = z - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - z) <= 1e-15 * (1.0 + z)) return next;
    z = next;
  }
  return z;
}

EnvelopeCheck verify_envelope(const TargetDensity& d, std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("verify_envelope: grid must be nonempty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0) || (i > 0 && !(grid[i] > grid[i - 1]))) {
      throw std::invalid_argument("verify_envelope: grid must be strictly increasing in [0, inf)");
    }
  }
  EnvelopeCheck out{std::numeric_limits<double>::infinity(), 0.0, false};
  const double m = d.tail_exponent();
  for (double x : grid) {
    const double r = d.pdf(x) * std::exp(m * std::log1p(x));
    out.c_low = std::min(out.c_low, r);
    out.c_high = std::max(out.c_high, r);
  }
  const double c = d.envelope_c();
  // Relative slack of a few ulps so an exact power law passes at its own constant.
  const double slack = 1e-12;
  out.pass = out.c_low >= c * (1.0 - slack) && out.c_high <= (1.0 / c) * (1.0 + slack);
  return out;
}

}  // namespace htd
