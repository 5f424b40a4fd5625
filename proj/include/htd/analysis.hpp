#pragma once

#include <vector>

#include "htd/construct.hpp"

namespace htd {

struct BvpOptions {
  /// Ratio of the geometric xi grid on [K, N].
  double grid_ratio = 1.01;
};

/// v(xi) = 2 int_K^xi pi(w1)^-1 int_w1^N psi(w2) pi(w2) / F(w2) dw2 dw1 on [K, N],
/// the solution of F (v''/2 + b v') = -psi with v(K) = 0, v'(N) = 0.
class BvpSolution {
 public:
  double operator()(double xi) const;
  double derivative(double xi) const;
  double K() const { return K_; }
  double N() const { return N_; }
  const std::vector<double>& nodes() const { return table_.nodes(); }
  const std::vector<double>& values() const { return table_.values(); }

 private:
  friend BvpSolution solve_bvp(const ProcessSpec&, const RealFn&, double, double, const BvpOptions&);
  HermiteTable table_;
  double K_ = 0.0;
  double N_ = 0.0;
};

/// Requires an accelerated spec. Cell integrals use nested 20-point Gauss-Legendre
/// on the geometric grid; v is stored as a quintic Hermite table using the exact
/// v' = 2 G / pi and v'' = -(ln pi)' v' - 2 psi / F. Throws std::invalid_argument for
/// K <= 0, N <= K or psi < 0 at any node.
BvpSolution solve_bvp(const ProcessSpec& accelerated, const RealFn& psi, double K, double N,
                      const BvpOptions& options = {});

struct MomentLadder {
  double K = 0.0;
  double N = 0.0;
  int q_max = 0;
  /// v[q - 1] holds v_q; v_0 = 1 is implicit.
  std::vector<BvpSolution> v;
  double a = 0.0;               // envelope constant from the speed function
  double a_conservative = 0.0;  // c^2
  double A_m = 0.0;             // int_K^inf (1 + w)^-m dw
  double C = 0.0;               // A_m / (a m)
  double C_conservative = 0.0;  // A_m / (c^2 m)
  double alpha_max = 0.0;       // 1 / C
  /// max_xi (v_1^{2N} - v_1^N) / v_1^{2N}, the truncation check in N.
  double n_convergence = 0.0;

  /// v_q(xi) for 0 <= q <= q_max.
  double value(int q, double xi) const;
};

/// Iterates psi_q = q v_{q-1}. Throws InvariantViolation when any v_q exceeds
/// q! C^q + 1e-8, fails v_q(K) = 0, or decreases along the grid.
MomentLadder moment_ladder(const ProcessSpec& accelerated, double K, double N, int q_max,
                           const BvpOptions& options = {});

/// sum_{q <= q_max} alpha^q v_q(xi) / q! + (alpha C)^(q_max+1) / (1 - alpha C).
/// Requires 0 <= alpha < 1 / C.
double exp_moment_bound(const MomentLadder& ladder, double alpha, double xi);

struct BoundPoint {
  double t = 0.0;
  double bound = 0.0;
};

/// 2 exp(-alpha t) / (1 - alpha C) at each time. Requires 0 < alpha < 1 / C.
std::vector<BoundPoint> tv_bound_curve(const MomentLadder& ladder, double alpha, const std::vector<double>& times);
std::vector<BoundPoint> tv_bound_curve(double C, double alpha, const std::vector<double>& times);

/// The law with density proportional to pi / F: the occupation law of Y o beta when Y
/// is pi-stationary. Immutable.
class SpeedWeightedLaw {
 public:
  SpeedWeightedLaw(const TargetDensity& d, const SpeedFunction& sf);
  double pdf(double x) const;
  double cdf(double x) const;
  double normalization() const { return norm_; }

 private:
  TargetDensity d_;
  SpeedFunction sf_;
  double norm_ = 1.0;
  HermiteTable cdf_;
};

}  // namespace htd
