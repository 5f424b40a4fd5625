#include "htd/numerics.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace htd {
namespace quad {

double adaptive(const RealFn& f, double a, double b, double rel_tol) {
  if (a == b) return 0.0;
  double err = 0.0;
  double l1 = 0.0;
  const double r = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      f, a, b, 20, rel_tol, &err, &l1);
  if (!std::isfinite(r) || err > 10.0 * rel_tol * l1 + 1e-300) {
    throw NumericalError("adaptive quadrature did not converge on [" + std::to_string(a) + ", " +
                         std::to_string(b) + "]");
  }
  return r;
}

double adaptive_geometric(const RealFn& f, double a, double b, double rel_tol) {
  if (a == b) return 0.0;
  const auto nodes = geometric_grid(a, b, 2.0);
  long double sum = 0.0L;
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) sum += adaptive(f, nodes[k], nodes[k + 1], rel_tol);
  return static_cast<double>(sum);
}

double gauss20(const RealFn& f, double a, double b) {
  return boost::math::quadrature::gauss<double, 20>::integrate(f, a, b);
}

void gauss20_nodes(double a, double b, std::span<double, 20> x, std::span<double, 20> w) {
  using rule = boost::math::quadrature::gauss<double, 20>;
  const auto& abscissa = rule::abscissa();
  const auto& weights = rule::weights();
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  // Rule stores non-negative abscissae; 20 points means 10 symmetric pairs.
  for (std::size_t i = 0; i < 10; ++i) {
    x[2 * i] = mid - half * abscissa[i];
    x[2 * i + 1] = mid + half * abscissa[i];
    w[2 * i] = half * weights[i];
    w[2 * i + 1] = half * weights[i];
  }
}

}  // namespace quad

std::vector<double> geometric_grid(double z0, double z1, double ratio) {
  if (!(z1 > z0) || !(z0 > -1.0) || !(ratio > 1.0)) {
    throw std::invalid_argument("geometric_grid: need -1 < z0 < z1 and ratio > 1");
  }
  const double span = std::log1p(z1) - std::log1p(z0);
  const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(span / std::log(ratio))));
  std::vector<double> nodes(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const double u = std::log1p(z0) + span * static_cast<double>(k) / static_cast<double>(n);
    nodes[k] = std::expm1(u);
  }
  nodes.front() = z0;
  nodes.back() = z1;
  return nodes;
}

HermiteTable::HermiteTable(std::vector<double> nodes, std::vector<double> values,
                           std::vector<double> d1, std::vector<double> d2)
    : nodes_(std::move(nodes)), values_(std::move(values)), d1_(std::move(d1)), d2_(std::move(d2)) {
  if (nodes_.size() < 2 || values_.size() != nodes_.size() || d1_.size() != nodes_.size() ||
      d2_.size() != nodes_.size()) {
    throw std::invalid_argument("HermiteTable: inconsistent node data");
  }
}

std::size_t HermiteTable::cell(double z) const {
  const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), z);
  const auto k = static_cast<std::ptrdiff_t>(it - nodes_.begin()) - 1;
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(nodes_.size()) - 2));
}

double HermiteTable::operator()(double z) const {
  const std::size_t k = cell(z);
  const double x0 = nodes_[k];
  const double h = nodes_[k + 1] - x0;
  const double t = (z - x0) / h;
  const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
  const double h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
  const double h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
  const double h2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5;
  const double h3 = 0.5 * t3 - t4 + 0.5 * t5;
  const double h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
  const double h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
  return values_[k] * h0 + h * d1_[k] * h1 + h * h * d2_[k] * h2 + h * h * d2_[k + 1] * h3 +
         h * d1_[k + 1] * h4 + values_[k + 1] * h5;
}

double HermiteTable::derivative(double z) const {
  const std::size_t k = cell(z);
  const double x0 = nodes_[k];
  const double h = nodes_[k + 1] - x0;
  const double t = (z - x0) / h;
  const double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
  const double h0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
  const double h1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
  const double h2 = t - 4.5 * t2 + 6.0 * t3 - 2.5 * t4;
  const double h3 = 1.5 * t2 - 4.0 * t3 + 2.5 * t4;
  const double h4 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
  const double h5 = 30.0 * t2 - 60.0 * t3 + 30.0 * t4;
  return (values_[k] * h0 + values_[k + 1] * h5) / h + d1_[k] * h1 + d1_[k + 1] * h4 +
         h * (d2_[k] * h2 + d2_[k + 1] * h3);
}

HermiteTable cumulative_table(const RealFn& g, const RealFn& dg, double z_max, double ratio,
                              Accumulate dir, double tail) {
  auto nodes = geometric_grid(0.0, z_max, ratio);
  const std::size_t n = nodes.size();
  std::vector<double> cells(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) cells[k] = quad::gauss20(g, nodes[k], nodes[k + 1]);

  std::vector<double> values(n), d1(n), d2(n);
  const double sign = dir == Accumulate::Forward ? 1.0 : -1.0;
  if (dir == Accumulate::Forward) {
    long double acc = 0.0L;
    values[0] = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
      acc += cells[k - 1];
      values[k] = static_cast<double>(acc);
    }
  } else {
    long double acc = tail;
    values[n - 1] = tail;
    for (std::size_t k = n - 1; k-- > 0;) {
      acc += cells[k];
      values[k] = static_cast<double>(acc);
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    d1[k] = sign * g(nodes[k]);
    d2[k] = sign * dg(nodes[k]);
  }
  return HermiteTable(std::move(nodes), std::move(values), std::move(d1), std::move(d2));
}

}  // namespace htd
