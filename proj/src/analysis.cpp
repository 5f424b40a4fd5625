#include "htd/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace htd {

double BvpSolution::operator()(double xi) const {
  if (xi <= K_) return 0.0;
  if (xi > N_ * (1.0 + 1e-12)) throw std::invalid_argument("BvpSolution: xi beyond the barrier N");
  return table_(std::min(xi, N_));
}

double BvpSolution::derivative(double xi) const {
  if (xi < K_ || xi > N_ * (1.0 + 1e-12)) throw std::invalid_argument("BvpSolution: xi outside [K, N]");
  return table_.derivative(std::min(xi, N_));
}

BvpSolution solve_bvp(const ProcessSpec& spec, const RealFn& psi, double K, double N, const BvpOptions& options) {
  if (spec.kind() != ProcessKind::AcceleratedX) throw std::invalid_argument("solve_bvp: needs an accelerated spec");
  if (!(K > 0.0) || !(N > K) || !std::isfinite(N)) throw std::invalid_argument("solve_bvp: need 0 < K < N < inf");
  const TargetDensity& d = *spec.density();
  const SpeedFunction& F = *spec.speed_function();

  auto nodes = geometric_grid(K, N, options.grid_ratio);
  const std::size_t n = nodes.size();
  std::vector<double> psi_nodes(n);
  for (std::size_t k = 0; k < n; ++k) {
    psi_nodes[k] = psi(nodes[k]);
    if (!(psi_nodes[k] >= 0.0) || !std::isfinite(psi_nodes[k])) {
      throw std::invalid_argument("solve_bvp: psi must be finite and >= 0 (psi(" + std::to_string(nodes[k]) +
                                  ") = " + std::to_string(psi_nodes[k]) + ")");
    }
  }
  auto source = [&](double w) { return psi(w) * d.pdf(w) / F(w); };

  // G(w) = int_w^N source, at the nodes, accumulated from the top.
  std::vector<double> G(n, 0.0);
  {
    long double acc = 0.0L;
    for (std::size_t k = n - 1; k-- > 0;) {
      acc += quad::gauss20(source, nodes[k], nodes[k + 1]);
      G[k] = static_cast<double>(acc);
    }
  }

  std::vector<double> values(n, 0.0), d1(n), d2(n);
  std::array<double, 20> xo, wo, xi_, wi;
  long double acc = 0.0L;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    quad::gauss20_nodes(nodes[k], nodes[k + 1], xo, wo);
    long double cell = 0.0L;
    for (std::size_t j = 0; j < 20; ++j) {
      quad::gauss20_nodes(xo[j], nodes[k + 1], xi_, wi);
      long double inner = G[k + 1];
      for (std::size_t l = 0; l < 20; ++l) inner += wi[l] * source(xi_[l]);
      cell += wo[j] * 2.0L * inner / d.pdf(xo[j]);
    }
    acc += cell;
    values[k + 1] = static_cast<double>(acc);
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double x = nodes[k];
    d1[k] = 2.0 * G[k] / d.pdf(x);
    d2[k] = -d.log_pdf_derivative(x) * d1[k] - 2.0 * psi_nodes[k] / F(x);
  }

  BvpSolution sol;
  sol.K_ = K;
  sol.N_ = N;
  sol.table_ = HermiteTable(std::move(nodes), std::move(values), std::move(d1), std::move(d2));
  return sol;
}

double MomentLadder::value(int q, double xi) const {
  if (q < 0 || q > q_max) throw std::invalid_argument("MomentLadder::value: q out of range");
  if (q == 0) return 1.0;
  return v[static_cast<std::size_t>(q - 1)](xi);
}

MomentLadder moment_ladder(const ProcessSpec& spec, double K, double N, int q_max, const BvpOptions& options) {
  if (q_max < 1 || q_max > 8) throw std::invalid_argument("moment_ladder: q_max must lie in [1, 8]");
  if (spec.kind() != ProcessKind::AcceleratedX) throw std::invalid_argument("moment_ladder: needs an accelerated spec");
  const TargetDensity& d = *spec.density();
  const SpeedFunction& F = *spec.speed_function();

  MomentLadder L;
  L.K = K;
  L.N = N;
  L.q_max = q_max;
  const double m = d.tail_exponent();
  L.a = F.a();
  L.a_conservative = F.a_conservative();
  L.A_m = std::pow(1.0 + K, 1.0 - m) / (m - 1.0);
  L.C = L.A_m / (L.a * m);
  L.C_conservative = L.A_m / (L.a_conservative * m);
  L.alpha_max = 1.0 / L.C;

  double factorial = 1.0;
  for (int q = 1; q <= q_max; ++q) {
    factorial *= q;
    RealFn psi;
    if (q == 1) {
      psi = [](double) { return 1.0; };
    } else {
      const BvpSolution& prev = L.v.back();
      psi = [&prev, q](double w) { return q * prev(w); };
    }
    L.v.push_back(solve_bvp(spec, psi, K, N, options));

    const BvpSolution& vq = L.v.back();
    const double bound = factorial * std::pow(L.C, q) + 1e-8;
    const auto& vals = vq.values();
    if (vals.front() != 0.0) throw InvariantViolation("moment ladder: v_" + std::to_string(q) + "(K) != 0");
    for (std::size_t k = 0; k < vals.size(); ++k) {
      if (vals[k] > bound) {
        throw InvariantViolation("moment ladder: v_" + std::to_string(q) + "(" + std::to_string(vq.nodes()[k]) +
                                 ") = " + std::to_string(vals[k]) + " exceeds q! C^q = " + std::to_string(bound));
      }
      if (k > 0 && vals[k] < vals[k - 1]) {
        throw InvariantViolation("moment ladder: v_" + std::to_string(q) + " decreases at xi = " +
                                 std::to_string(vq.nodes()[k]));
      }
    }
  }

  const auto wider = solve_bvp(spec, [](double) { return 1.0; }, K, 2.0 * N, options);
  for (double xi : L.v.front().nodes()) {
    const double hi = wider(xi);
    if (hi > 0.0) L.n_convergence = std::max(L.n_convergence, (hi - L.v.front()(xi)) / hi);
  }
  return L;
}

double exp_moment_bound(const MomentLadder& ladder, double alpha, double xi) {
  const double r = alpha * ladder.C;
  if (!(alpha >= 0.0) || !(r < 1.0)) throw std::invalid_argument("exp_moment_bound: need 0 <= alpha < 1/C");
  double sum = 0.0;
  double coeff = 1.0;  // alpha^q / q!
  for (int q = 0; q <= ladder.q_max; ++q) {
    if (q > 0) coeff *= alpha / q;
    sum += coeff * ladder.value(q, xi);
  }
  return sum + std::pow(r, ladder.q_max + 1) / (1.0 - r);
}

std::vector<BoundPoint> tv_bound_curve(double C, double alpha, const std::vector<double>& times) {
  if (!(alpha > 0.0) || !(alpha * C < 1.0)) throw std::invalid_argument("tv_bound_curve: need 0 < alpha < 1/C");
  std::vector<BoundPoint> out;
  out.reserve(times.size());
  for (double t : times) out.push_back({t, 2.0 * std::exp(-alpha * t) / (1.0 - alpha * C)});
  return out;
}

std::vector<BoundPoint> tv_bound_curve(const MomentLadder& ladder, double alpha, const std::vector<double>& times) {
  return tv_bound_curve(ladder.C, alpha, times);
}

SpeedWeightedLaw::SpeedWeightedLaw(const TargetDensity& d, const SpeedFunction& sf) : d_(d), sf_(sf) {
  auto u = [&](double x) { return d_.pdf(x) / sf_(x); };
  auto du = [&](double x) { return u(x) * (d_.log_pdf_derivative(x) - sf_.derivative(x) / sf_(x)); };
  const double xc = d.x_cut();
  cdf_ = cumulative_table(u, du, xc, d.options().table_ratio);
  // u decays like (1 + x)^(-2m-1) beyond x_cut.
  const double m = d.tail_exponent();
  norm_ = cdf_.values().back() + u(xc) * (1.0 + xc) / (2.0 * m);
}

double SpeedWeightedLaw::pdf(double x) const { return d_.pdf(x) / sf_(x) / norm_; }

double SpeedWeightedLaw::cdf(double x) const {
  if (x <= 0.0) return 0.0;
  if (x <= cdf_.back()) return cdf_(x) / norm_;
  const double xc = cdf_.back();
  const double m = d_.tail_exponent();
  const double tail = d_.pdf(xc) / sf_(xc) * (1.0 + xc) / (2.0 * m) / norm_;
  return 1.0 - tail * std::pow((1.0 + x) / (1.0 + xc), -2.0 * m);
}

}  // namespace htd
