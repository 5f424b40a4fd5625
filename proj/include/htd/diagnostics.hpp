#pragma once

#include <string>
#include <vector>

#include "htd/ensemble.hpp"

namespace htd {

/// Histogram on [0, inf): `edges` has B + 1 entries from 0 to the top quantile, and
/// one more tail bin collects everything above edges.back().
struct Binning {
  std::vector<double> edges;
  /// Reference probability of each of the B + 1 bins.
  std::vector<double> mass;

  std::size_t bins() const { return mass.size(); }
  std::size_t index(double x) const;
};

/// B bins of equal pi-mass on [0, q_top] plus a tail bin of mass 1 - top.
Binning pi_quantile_binning(const TargetDensity& d, std::size_t bins = 64, double top = 0.999);

/// Same edges, reference masses taken from another cdf.
Binning with_reference(const Binning& b, const RealFn& cdf);

/// 1/2 sum_k |n_k / n - p_k|; NaN states are skipped. Returns the number of used states.
double binned_tv(std::span<const double> states, const Binning& b, std::size_t* used = nullptr);

/// Expected binned TV of an exact sample of size n: 1/2 sum_k sqrt(2 p_k (1 - p_k) / (pi n)).
double noise_floor(const Binning& b, std::size_t n);
/// The cruder aggregate bound sqrt(2 B / (pi n)).
double aggregate_noise_floor(std::size_t bins, std::size_t n);

struct TvOptions {
  std::size_t bins = 64;
  double top = 0.999;
  std::size_t bootstrap = 200;
  /// Smallest allowed expected count per bin.
  double min_expected = 5.0;
};

struct TvCurve {
  std::vector<double> checkpoints;
  std::vector<double> tv;
  std::vector<double> se;
  std::size_t ensemble_size = 0;
  Binning binning;
  std::string x0_policy;
  double noise_floor = 0.0;
  double aggregate_noise_floor = 0.0;
  EnsembleStats stats;
};

/// TV and bootstrap SE for every checkpoint of an already simulated ensemble.
/// The bootstrap resamples bin counts multinomially from a stream keyed by `seed`.
TvCurve tv_curve_from_states(const CheckpointStates& states, const Binning& b, std::size_t bootstrap, std::uint64_t seed,
                             const std::string& x0_policy);

/// Simulates and measures. Throws std::invalid_argument when ensemble < 1000 or some
/// bin would expect fewer than min_expected states.
TvCurve tv_curve(const ProcessSpec& spec, const InitialLaw& init, std::span<const double> checkpoints,
                 const StepPolicy& policy, const EnsembleOptions& opt, const TvOptions& tv = {});

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

struct HittingStats {
  double K = 0.0;
  double x0 = 0.0;
  double horizon = 0.0;
  std::size_t n = 0;
  std::size_t censored = 0;
  std::vector<double> samples;
  /// moments[q - 1] estimates E gamma^q.
  std::vector<Estimate> moments;
  std::vector<double> alphas;
  std::vector<Estimate> exp_moments;
  EnsembleStats stats;

  double censored_fraction() const { return n ? static_cast<double>(censored) / static_cast<double>(n) : 0.0; }
};

class HorizonTooShort : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Sample mean and standard error of g(gamma_i).
Estimate sample_estimate(std::span<const double> samples, const RealFn& g);

/// Throws HorizonTooShort when 1% or more of the paths are censored.
HittingStats hitting_stats(const ProcessSpec& spec, double x0, double K, const std::vector<double>& alphas, int q_max,
                           double horizon, const StepPolicy& policy, const EnsembleOptions& opt);

enum class LlnFunction { TailPower, Cauchy, Constant };

const char* to_string(LlnFunction g);
/// (1 + |r|)^-(m+1), 1 / (1 + r^2), or 1.
RealFn lln_function(LlnFunction g, double m);
/// int g pi by quadrature.
double stationary_average(const TargetDensity& d, const RealFn& g);

struct LlnRow {
  double T = 0.0;
  double exceedance = 0.0;  // fraction of paths with |average - a_g| > eps
  double se = 0.0;
  double mean_average = 0.0;
};

struct LlnResult {
  double a_g = 0.0;
  double eps = 0.0;
  double delta = 0.0;
  std::vector<LlnRow> rows;
  EnsembleStats stats;
};

/// Langevin time averages of g against a_g; eps = eps_rel * a_g.
LlnResult lln_check(const TargetDensity& d, LlnFunction g, std::span<const double> T_list, const InitialLaw& init,
                    const StepPolicy& policy, const EnsembleOptions& opt, double eps_rel = 0.1, double delta = 0.05);

enum class RateModel { Exponential, Polynomial };

const char* to_string(RateModel m);

/// Exponential: ln TV = ln C - rate t. Polynomial: ln TV = ln C - rate ln t.
struct RateFit {
  RateModel model = RateModel::Exponential;
  double rate = 0.0;
  double rate_ci_low = 0.0;
  double rate_ci_high = 0.0;
  double log_C = 0.0;
  double log_C_ci_low = 0.0;
  double log_C_ci_high = 0.0;
  double r2 = 0.0;
  std::size_t first = 0;  // fit window, inclusive checkpoint indices
  std::size_t last = 0;
  std::vector<double> residuals;

  std::size_t points() const { return last - first + 1; }
};

class InsufficientData : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

struct FitWindow {
  std::size_t first = 0;
  std::size_t last = 0;
  std::size_t count = 0;
};

/// From the first checkpoint with TV < burn_in, while TV stays above
/// floor_multiple * noise floor (and t > 0 for the polynomial model).
FitWindow fit_window(const TvCurve& curve, RateModel model, double burn_in = 0.5, double floor_multiple = 3.0);

/// OLS on the given points; 95% Student-t intervals. Needs >= 3 points with tv > 0.
RateFit rate_fit(std::span<const double> t, std::span<const double> tv, RateModel model);
/// Fit over fit_window(curve, model); throws InsufficientData below 5 usable points.
RateFit rate_fit(const TvCurve& curve, RateModel model, double burn_in = 0.5, double floor_multiple = 3.0);

struct SweepResult {
  std::vector<double> x0;
  std::vector<TvCurve> curves;
  std::vector<double> max_tv;  // per checkpoint, over x0
  double final_spread = 0.0;   // max - min TV at the last checkpoint
  double pooled_se = 0.0;      // sqrt(se_max^2 + se_min^2) of the two extreme curves
  bool collapsed = false;      // final_spread <= 3 pooled_se
};

/// One tv_curve per starting point, each with its own derived seed.
SweepResult initial_condition_sweep(const ProcessSpec& spec, const std::vector<double>& x0_list,
                                    std::span<const double> checkpoints, const StepPolicy& policy,
                                    const EnsembleOptions& opt, const TvOptions& tv = {});
SweepResult summarize_sweep(std::vector<double> x0_list, std::vector<TvCurve> curves);

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|; NaN entries are skipped.
double ks_statistic(std::vector<double> a, std::vector<double> b);
/// Asymptotic critical value c(level) sqrt((n + m) / (n m)), c = sqrt(-ln(level / 2) / 2).
double ks_critical(std::size_t n, std::size_t m, double level = 0.01);

}  // namespace htd
