#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace htd {

/// Raised when a quadrature or simulation cannot reach its requested accuracy.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a computed quantity breaks a bound it is proven to satisfy.
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using RealFn = std::function<double(double)>;

namespace quad {

/// Adaptive Gauss-Kronrod (31 point) on a finite interval. Throws NumericalError
/// when the error estimate stays above `rel_tol * L1`.
double adaptive(const RealFn& f, double a, double b, double rel_tol = 1e-12);

/// Adaptive integral over [a, b] split into pieces that are geometric in (1 + x),
/// which keeps power-law integrands well resolved over many decades.
double adaptive_geometric(const RealFn& f, double a, double b, double rel_tol = 1e-12);

/// Fixed 20-point Gauss-Legendre rule.
double gauss20(const RealFn& f, double a, double b);

/// Nodes and weights of the 20-point rule mapped to [a, b].
void gauss20_nodes(double a, double b, std::span<double, 20> x, std::span<double, 20> w);

}  // namespace quad

/// Nodes equally spaced in ln(1 + z) from z0 to z1; the common ratio of 1 + z is at most `ratio`.
std::vector<double> geometric_grid(double z0, double z1, double ratio);

/// Piecewise quintic Hermite interpolant built from values and exact first and
/// second derivatives at the nodes. C2 across nodes.
class HermiteTable {
 public:
  HermiteTable() = default;
  HermiteTable(std::vector<double> nodes, std::vector<double> values, std::vector<double> d1,
               std::vector<double> d2);

  double operator()(double z) const;
  double derivative(double z) const;

  double front() const { return nodes_.front(); }
  double back() const { return nodes_.back(); }
  bool empty() const { return nodes_.empty(); }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& d1() const { return d1_; }

  std::size_t cell(double z) const;

 private:
  std::vector<double> nodes_, values_, d1_, d2_;
};

/// Running integral of g on a geometric grid over [0, z_max], stored as a
/// HermiteTable. Forward tables hold the integral from 0 to z; backward tables
/// hold the integral from z to z_max plus a caller supplied tail constant.
enum class Accumulate { Forward, Backward };

HermiteTable cumulative_table(const RealFn& g, const RealFn& dg, double z_max, double ratio,
                              Accumulate dir = Accumulate::Forward, double tail = 0.0);

}  // namespace htd
