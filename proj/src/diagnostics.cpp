#include "htd/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <boost/math/distributions/students_t.hpp>

namespace htd {

namespace {

constexpr std::uint64_t kBootstrapTag = 0xB0075744AB1E5EEDull;

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  long double s = 0.0L, s2 = 0.0L;
  for (double x : v) {
    s += x;
    s2 += static_cast<long double>(x) * x;
  }
  const long double n = static_cast<long double>(v.size());
  const long double var = (s2 - s * s / n) / (n - 1.0L);
  return var > 0.0L ? static_cast<double>(std::sqrt(var)) : 0.0;
}

}  // namespace

std::size_t Binning::index(double x) const {
  const std::size_t top = edges.size() - 1;
  if (x >= edges.back()) return top;
  const auto it = std::upper_bound(edges.begin(), edges.end(), x);
  if (it == edges.begin()) return 0;
  return static_cast<std::size_t>(it - edges.begin()) - 1;
}

Binning pi_quantile_binning(const TargetDensity& d, std::size_t bins, double top) {
  if (bins < 1) throw std::invalid_argument("binning: need at least one bin");
  if (!(top > 0.0 && top < 1.0)) throw std::invalid_argument("binning: top quantile must lie in (0, 1)");
  Binning b;
  b.edges.resize(bins + 1);
  b.edges[0] = 0.0;
  for (std::size_t k = 1; k <= bins; ++k) b.edges[k] = d.quantile(top * static_cast<double>(k) / static_cast<double>(bins));
  return with_reference(b, [&](double x) { return d.cdf(x); });
}

Binning with_reference(const Binning& b, const RealFn& cdf) {
  Binning out;
  out.edges = b.edges;
  out.mass.resize(b.edges.size());
  double prev = cdf(b.edges[0]);
  for (std::size_t k = 1; k < b.edges.size(); ++k) {
    const double c = cdf(b.edges[k]);
    out.mass[k - 1] = c - prev;
    prev = c;
  }
  out.mass.back() = 1.0 - prev;
  return out;
}

namespace {

std::vector<double> bin_counts(std::span<const double> states, const Binning& b, std::size_t& used) {
  std::vector<double> counts(b.bins(), 0.0);
  used = 0;
  for (double x : states) {
    if (std::isnan(x)) continue;
    counts[b.index(x)] += 1.0;
    ++used;
  }
  return counts;
}

double tv_from_counts(const std::vector<double>& counts, std::size_t n, const Binning& b) {
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) s += std::abs(counts[k] / static_cast<double>(n) - b.mass[k]);
  return 0.5 * s;
}

}  // namespace

double binned_tv(std::span<const double> states, const Binning& b, std::size_t* used) {
  std::size_t n = 0;
  const auto counts = bin_counts(states, b, n);
  if (used) *used = n;
  return tv_from_counts(counts, n, b);
}

double noise_floor(const Binning& b, std::size_t n) {
  double s = 0.0;
  for (double p : b.mass) s += std::sqrt(2.0 * p * (1.0 - p) / (std::numbers::pi * static_cast<double>(n)));
  return 0.5 * s;
}

double aggregate_noise_floor(std::size_t bins, std::size_t n) {
  return std::sqrt(2.0 * static_cast<double>(bins) / (std::numbers::pi * static_cast<double>(n)));
}

TvCurve tv_curve_from_states(const CheckpointStates& states, const Binning& b, std::size_t bootstrap, std::uint64_t seed,
                             const std::string& x0_policy) {
  TvCurve curve;
  curve.checkpoints = states.checkpoints;
  curve.binning = b;
  curve.x0_policy = x0_policy;
  curve.stats = states.stats;
  curve.ensemble_size = states.states.empty() ? 0 : states.states.front().size();
  curve.noise_floor = noise_floor(b, curve.ensemble_size);
  curve.aggregate_noise_floor = aggregate_noise_floor(b.bins(), curve.ensemble_size);

  for (std::size_t c = 0; c < states.states.size(); ++c) {
    std::size_t n = 0;
    const auto counts = bin_counts(states.states[c], b, n);
    curve.tv.push_back(tv_from_counts(counts, n, b));

    std::vector<double> reps;
    reps.reserve(bootstrap);
    RngStream rng(derive_seed(seed, kBootstrapTag), c);
    std::vector<double> resampled(counts.size());
    for (std::size_t r = 0; r < bootstrap && n > 0; ++r) {
      long long remaining = static_cast<long long>(n);
      double rest = 1.0;
      for (std::size_t k = 0; k < counts.size(); ++k) {
        const double p = counts[k] / static_cast<double>(n);
        long long draw = 0;
        if (remaining > 0 && p > 0.0) {
          if (k + 1 == counts.size() || p >= rest) {
            draw = remaining;
          } else {
            std::binomial_distribution<long long> binom(remaining, std::min(1.0, p / rest));
            draw = binom(rng);
          }
        }
        resampled[k] = static_cast<double>(draw);
        remaining -= draw;
        rest -= p;
      }
      reps.push_back(tv_from_counts(resampled, n, b));
    }
    curve.se.push_back(sample_sd(reps));
  }
  return curve;
}

TvCurve tv_curve(const ProcessSpec& spec, const InitialLaw& init, std::span<const double> checkpoints,
                 const StepPolicy& policy, const EnsembleOptions& opt, const TvOptions& tv) {
  if (opt.size < 1000) throw std::invalid_argument("tv_curve: ensemble size must be >= 1000");
  const TargetDensity* d = spec.density();
  if (!d) throw std::invalid_argument("tv_curve: spec has no target density");
  const Binning b = pi_quantile_binning(*d, tv.bins, tv.top);
  const double smallest = *std::min_element(b.mass.begin(), b.mass.end());
  if (smallest * static_cast<double>(opt.size) < tv.min_expected) {
    throw std::invalid_argument("tv_curve: ensemble too small for the binning (expected count " +
                                std::to_string(smallest * static_cast<double>(opt.size)) + " < " +
                                std::to_string(tv.min_expected) + " in some bin)");
  }
  const auto states = checkpoint_states(spec, init, checkpoints, policy, opt);
  return tv_curve_from_states(states, b, tv.bootstrap, opt.seed, init.describe());
}

Estimate sample_estimate(std::span<const double> samples, const RealFn& g) {
  std::vector<double> v;
  v.reserve(samples.size());
  long double s = 0.0L;
  for (double x : samples) {
    v.push_back(g(x));
    s += v.back();
  }
  Estimate e;
  if (v.empty()) return e;
  e.value = static_cast<double>(s / static_cast<long double>(v.size()));
  e.se = sample_sd(v) / std::sqrt(static_cast<double>(v.size()));
  return e;
}

HittingStats hitting_stats(const ProcessSpec& spec, double x0, double K, const std::vector<double>& alphas, int q_max,
                           double horizon, const StepPolicy& policy, const EnsembleOptions& opt) {
  if (q_max < 1) throw std::invalid_argument("hitting_stats: q_max must be >= 1");
  const auto sample = hitting_times(spec, InitialLaw::fixed(x0), K, horizon, policy, opt);
  HittingStats hs;
  hs.K = K;
  hs.x0 = x0;
  hs.horizon = horizon;
  hs.n = sample.times.size();
  hs.censored = sample.censored_count;
  hs.samples = sample.times;
  hs.stats = sample.stats;
  hs.alphas = alphas;
  if (hs.censored_fraction() >= 0.01) {
    throw HorizonTooShort("hitting_stats: horizon too short, censored fraction " +
                          std::to_string(hs.censored_fraction()) + " >= 1%");
  }
  for (int q = 1; q <= q_max; ++q) {
    hs.moments.push_back(sample_estimate(hs.samples, [q](double t) { return std::pow(t, q); }));
  }
  for (double a : alphas) {
    hs.exp_moments.push_back(sample_estimate(hs.samples, [a](double t) { return std::exp(a * t); }));
  }
  return hs;
}

const char* to_string(LlnFunction g) {
  switch (g) {
    case LlnFunction::TailPower: return "tail_power";
    case LlnFunction::Cauchy: return "cauchy";
    case LlnFunction::Constant: return "constant";
  }
  return "?";
}

RealFn lln_function(LlnFunction g, double m) {
  switch (g) {
    case LlnFunction::TailPower: return [m](double r) { return std::pow(1.0 + std::abs(r), -(m + 1.0)); };
    case LlnFunction::Cauchy: return [](double r) { return 1.0 / (1.0 + r * r); };
    case LlnFunction::Constant: return [](double) { return 1.0; };
  }
  return nullptr;
}

double stationary_average(const TargetDensity& d, const RealFn& g) {
  const double xc = d.x_cut();
  const double body = quad::adaptive_geometric([&](double x) { return g(x) * d.pdf(x); }, 0.0, xc, 1e-12);
  return body + g(xc) * (1.0 - d.cdf(xc));
}

LlnResult lln_check(const TargetDensity& d, LlnFunction g_id, std::span<const double> T_list, const InitialLaw& init,
                    const StepPolicy& policy, const EnsembleOptions& opt, double eps_rel, double delta) {
  if (!(eps_rel > 0.0)) throw std::invalid_argument("lln_check: eps must be > 0");
  const RealFn g = lln_function(g_id, d.tail_exponent());
  LlnResult out;
  out.a_g = stationary_average(d, g);
  out.eps = eps_rel * out.a_g;
  out.delta = delta;
  const auto avg = time_averages(langevin_spec(d), init, g, T_list, policy, opt);
  out.stats = avg.stats;
  for (std::size_t j = 0; j < avg.T.size(); ++j) {
    std::size_t n = 0, hits = 0;
    long double sum = 0.0L;
    for (double a : avg.averages[j]) {
      if (std::isnan(a)) continue;
      ++n;
      sum += a;
      if (std::abs(a - out.a_g) > out.eps) ++hits;
    }
    LlnRow row;
    row.T = avg.T[j];
    if (n > 0) {
      row.exceedance = static_cast<double>(hits) / static_cast<double>(n);
      row.se = std::sqrt(row.exceedance * (1.0 - row.exceedance) / static_cast<double>(n));
      row.mean_average = static_cast<double>(sum / static_cast<long double>(n));
    }
    out.rows.push_back(row);
  }
  return out;
}

const char* to_string(RateModel m) { return m == RateModel::Exponential ? "exponential" : "polynomial"; }

RateFit rate_fit(std::span<const double> t, std::span<const double> tv, RateModel model) {
  if (t.size() != tv.size()) throw std::invalid_argument("rate_fit: size mismatch");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(tv[i] > 0.0)) continue;
    if (model == RateModel::Polynomial && !(t[i] > 0.0)) continue;
    xs.push_back(model == RateModel::Exponential ? t[i] : std::log(t[i]));
    ys.push_back(std::log(tv[i]));
  }
  const std::size_t n = xs.size();
  if (n < 3) throw InsufficientData("rate_fit: need at least 3 positive points, have " + std::to_string(n));
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw InsufficientData("rate_fit: abscissae are all equal");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;

  RateFit fit;
  fit.model = model;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ys[i] - (intercept + slope * xs[i]);
    fit.residuals.push_back(r);
    sse += r * r;
  }
  fit.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  const double s2 = sse / static_cast<double>(n - 2);
  const double se_slope = std::sqrt(s2 / sxx);
  const double se_icpt = std::sqrt(s2 * (1.0 / static_cast<double>(n) + mx * mx / sxx));
  const boost::math::students_t dist(static_cast<double>(n - 2));
  const double q = boost::math::quantile(dist, 0.975);
  fit.rate = -slope;
  fit.rate_ci_low = -slope - q * se_slope;
  fit.rate_ci_high = -slope + q * se_slope;
  fit.log_C = intercept;
  fit.log_C_ci_low = intercept - q * se_icpt;
  fit.log_C_ci_high = intercept + q * se_icpt;
  fit.first = 0;
  fit.last = t.size() - 1;
  return fit;
}

FitWindow fit_window(const TvCurve& curve, RateModel model, double burn_in, double floor_multiple) {
  FitWindow w;
  const double threshold = floor_multiple * curve.noise_floor;
  std::size_t i = 0;
  const std::size_t n = curve.tv.size();
  while (i < n && !(curve.tv[i] < burn_in && (model == RateModel::Exponential || curve.checkpoints[i] > 0.0))) ++i;
  if (i == n) return w;
  w.first = i;
  while (i < n && curve.tv[i] > threshold) ++i;
  if (i == w.first) return w;
  w.last = i - 1;
  w.count = w.last - w.first + 1;
  return w;
}

RateFit rate_fit(const TvCurve& curve, RateModel model, double burn_in, double floor_multiple) {
  const FitWindow w = fit_window(curve, model, burn_in, floor_multiple);
  if (w.count < 5) {
    throw InsufficientData("rate_fit: only " + std::to_string(w.count) +
                           " checkpoints past burn-in and above the noise floor (need 5)");
  }
  const std::span<const double> t(curve.checkpoints.data() + w.first, w.count);
  const std::span<const double> tv(curve.tv.data() + w.first, w.count);
  RateFit fit = rate_fit(t, tv, model);
  fit.first = w.first;
  fit.last = w.last;
  return fit;
}

SweepResult summarize_sweep(std::vector<double> x0_list, std::vector<TvCurve> curves) {
  if (curves.empty() || curves.size() != x0_list.size()) throw std::invalid_argument("sweep: curve/x0 mismatch");
  SweepResult out;
  out.x0 = std::move(x0_list);
  out.curves = std::move(curves);
  const std::size_t nc = out.curves.front().tv.size();
  for (std::size_t c = 0; c < nc; ++c) {
    double hi = 0.0;
    for (const auto& cv : out.curves) hi = std::max(hi, cv.tv[c]);
    out.max_tv.push_back(hi);
  }
  std::size_t lo_i = 0, hi_i = 0;
  for (std::size_t k = 1; k < out.curves.size(); ++k) {
    if (out.curves[k].tv.back() < out.curves[lo_i].tv.back()) lo_i = k;
    if (out.curves[k].tv.back() > out.curves[hi_i].tv.back()) hi_i = k;
  }
  const auto& lo = out.curves[lo_i];
  const auto& hi = out.curves[hi_i];
  out.final_spread = hi.tv.back() - lo.tv.back();
  out.pooled_se = lo_i == hi_i ? lo.se.back() : std::hypot(lo.se.back(), hi.se.back());
  out.collapsed = out.final_spread <= 3.0 * out.pooled_se;
  return out;
}

SweepResult initial_condition_sweep(const ProcessSpec& spec, const std::vector<double>& x0_list,
                                    std::span<const double> checkpoints, const StepPolicy& policy,
                                    const EnsembleOptions& opt, const TvOptions& tv) {
  if (x0_list.empty()) throw std::invalid_argument("initial_condition_sweep: x0 list must be nonempty");
  std::vector<TvCurve> curves;
  for (std::size_t k = 0; k < x0_list.size(); ++k) {
    EnsembleOptions o = opt;
    o.seed = derive_seed(opt.seed, k + 1);
    curves.push_back(tv_curve(spec, InitialLaw::fixed(x0_list[k]), checkpoints, policy, o, tv));
  }
  return summarize_sweep(x0_list, std::move(curves));
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::erase_if(a, [](double x) { return std::isnan(x); });
  std::erase_if(b, [](double x) { return std::isnan(x); });
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_statistic: samples must be nonempty");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_critical(std::size_t n, std::size_t m, double level) {
  if (n == 0 || m == 0 || !(level > 0.0 && level < 1.0)) throw std::invalid_argument("ks_critical: bad arguments");
  const double c = std::sqrt(-0.5 * std::log(level / 2.0));
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  return c * std::sqrt((nn + mm) / (nn * mm));
}

}  // namespace htd
