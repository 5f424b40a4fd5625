#include <doctest.h>

#include <cmath>
#include <numeric>

#include "htd/analysis.hpp"
#include "htd/diagnostics.hpp"

using namespace htd;

namespace {

const TargetDensity& pareto() {
  static const TargetDensity d = make_density(ParetoShifted{5.0});
  return d;
}

EnsembleOptions options(std::size_t n, std::uint64_t seed = 3) {
  EnsembleOptions o;
  o.size = n;
  o.seed = seed;
  return o;
}

TvCurve synthetic(const std::vector<double>& t, const RealFn& tv, double floor) {
  TvCurve c;
  c.checkpoints = t;
  for (double s : t) {
    c.tv.push_back(tv(s));
    c.se.push_back(1e-3);
  }
  c.noise_floor = floor;
  return c;
}

}  // namespace

TEST_CASE("quantile binning has equal pi-mass bins and a tail bin") {
  const auto b = pi_quantile_binning(pareto(), 64, 0.999);
  REQUIRE(b.bins() == 65);
  REQUIRE(b.edges.size() == 65);
  CHECK(b.edges.front() == 0.0);
  CHECK(b.edges.back() == doctest::Approx(pareto().quantile(0.999)));
  for (std::size_t k = 0; k < 64; ++k) CHECK(b.mass[k] == doctest::Approx(0.999 / 64).epsilon(1e-9));
  CHECK(b.mass[64] == doctest::Approx(0.001).epsilon(1e-9));
  CHECK(std::accumulate(b.mass.begin(), b.mass.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(b.index(0.0) == 0);
  CHECK(b.index(1e9) == 64);
}

TEST_CASE("binned TV of exact, degenerate and noisy samples") {
  const auto& d = pareto();
  const auto b = pi_quantile_binning(d, 64);
  // Stratified quantiles put exactly the reference mass in each bin.
  std::vector<double> exact;
  const int n = 64000;
  for (int i = 0; i < n; ++i) exact.push_back(d.quantile((i + 0.5) / n));
  CHECK(binned_tv(exact, b) < 2e-3);
  const std::vector<double> point(1000, 0.01);
  CHECK(binned_tv(point, b) == doctest::Approx(1.0 - b.mass[0]).epsilon(1e-12));
  std::vector<double> with_nan = point;
  with_nan.push_back(NAN);
  std::size_t used = 0;
  binned_tv(with_nan, b, &used);
  CHECK(used == 1000);

  // Iid samples sit at the noise floor on average.
  const auto law = InitialLaw::stationary(d);
  double mean_tv = 0.0;
  const int reps = 40, m = 5000;
  for (int r = 0; r < reps; ++r) {
    std::vector<double> s(m);
    for (int i = 0; i < m; ++i) s[i] = law.sample(i, 100 + r);
    mean_tv += binned_tv(s, b) / reps;
  }
  CHECK(mean_tv == doctest::Approx(noise_floor(b, m)).epsilon(0.1));
  CHECK(noise_floor(b, m) < aggregate_noise_floor(65, m));
}

TEST_CASE("tv curves: stationary starts stay at the noise floor, far starts do not") {
  const auto& d = pareto();
  const std::vector<double> cps{0.5, 1.0};
  const auto policy = StepPolicy::adaptive_scale(1e-2, 1e-3);
  const auto y = tv_curve(langevin_spec(d), InitialLaw::stationary(d), cps, policy, options(5000));
  for (double v : y.tv) CHECK(v < 3.0 * y.noise_floor);
  const auto z = tv_curve(mean_reverting_spec(d, mean_reverting_coefficients(d)), InitialLaw::stationary(d), cps, policy, options(5000));
  for (double v : z.tv) CHECK(v < 3.0 * z.noise_floor);
  const auto far = tv_curve(langevin_spec(d), InitialLaw::fixed(50.0), cps, policy, options(5000));
  for (double v : far.tv) CHECK(v > 0.9);
  for (double s : far.se) CHECK(s > 0.0);
  CHECK_THROWS_AS(tv_curve(langevin_spec(d), InitialLaw::fixed(1.0), cps, policy, options(999)), std::invalid_argument);
  TvOptions fine;
  fine.bins = 512;
  CHECK_THROWS_AS(tv_curve(langevin_spec(d), InitialLaw::fixed(1.0), cps, policy, options(1000), fine),
                  std::invalid_argument);
}

TEST_CASE("accelerated process from pi relaxes to the speed-weighted law") {
  const auto& d = pareto();
  const auto sf = speed_function(d);
  const auto b = pi_quantile_binning(d, 64);
  const auto cs = checkpoint_states(accelerated_spec(d, sf), InitialLaw::stationary(d), std::vector{3.0},
                                    StepPolicy::adaptive_scale(1e-2, 1e-3), options(5000));
  const SpeedWeightedLaw w(d, sf);
  const auto wb = with_reference(b, [&](double x) { return w.cdf(x); });
  const double tv_w = binned_tv(cs.states[0], wb);
  CHECK(tv_w < 3.0 * noise_floor(wb, 5000));
  CHECK(binned_tv(cs.states[0], b) > 0.08);
}

TEST_CASE("rate fits recover synthetic rates") {
  std::vector<double> t;
  for (double s = 0.5; s <= 10.0; s += 0.5) t.push_back(s);
  const auto e = synthetic(t, [](double s) { return 0.4 * std::exp(-0.7 * s); }, 1e-9);
  const auto fe = rate_fit(e, RateModel::Exponential);
  CHECK(fe.rate == doctest::Approx(0.7).epsilon(1e-10));
  CHECK(fe.log_C == doctest::Approx(std::log(0.4)).epsilon(1e-10));
  CHECK(fe.r2 == doctest::Approx(1.0));
  CHECK(fe.rate_ci_low <= fe.rate);
  CHECK(fe.rate_ci_high >= fe.rate);
  const auto p = synthetic(t, [](double s) { return 0.45 * std::pow(s, -1.5); }, 1e-9);
  const auto fp = rate_fit(p, RateModel::Polynomial);
  CHECK(fp.rate == doctest::Approx(1.5).epsilon(1e-10));
  CHECK(rate_fit(p, RateModel::Exponential).r2 < fp.r2);
}

TEST_CASE("fit window starts after burn-in and stops at the noise floor") {
  std::vector<double> t;
  for (double s = 0.0; s <= 10.0; s += 1.0) t.push_back(s);
  const auto c = synthetic(t, [](double s) { return std::exp(-0.5 * s); }, 0.01);
  const auto w = fit_window(c, RateModel::Exponential);
  // TV < 0.5 from t = 2; above 0.03 up to t = 7.
  CHECK(c.checkpoints[w.first] == 2.0);
  CHECK(c.checkpoints[w.last] == 7.0);
  CHECK(w.count == 6);
  const auto flat = synthetic(t, [](double) { return 0.9; }, 0.01);
  CHECK_THROWS_AS(rate_fit(flat, RateModel::Exponential), InsufficientData);
}

TEST_CASE("Kolmogorov-Smirnov statistic and critical value") {
  const std::vector<double> a{1, 2, 3, 4};
  CHECK(ks_statistic(a, a) == 0.0);
  CHECK(ks_statistic(a, {10, 11, 12}) == 1.0);
  CHECK(ks_statistic({1, 2, 3, 4}, {3, 4, 5, 6}) == doctest::Approx(0.5));
  CHECK(ks_statistic({1, NAN, 2}, {1, 2}) == 0.0);
  CHECK(ks_critical(100, 100) == doctest::Approx(std::sqrt(-std::log(0.005) / 2.0) * std::sqrt(0.02)));
}

TEST_CASE("law of large numbers helpers") {
  const auto& d = pareto();
  const auto g = lln_function(LlnFunction::TailPower, 5.0);
  CHECK(g(1.0) == doctest::Approx(std::pow(2.0, -6.0)));
  // int (1 + x)^-6 4 (1 + x)^-5 dx = 4 / 10.
  CHECK(stationary_average(d, g) == doctest::Approx(0.4).epsilon(1e-10));
  CHECK(stationary_average(d, lln_function(LlnFunction::Constant, 5.0)) == doctest::Approx(1.0).epsilon(1e-10));
  const auto r = lln_check(d, LlnFunction::TailPower, std::vector{5.0, 10.0}, InitialLaw::fixed(1.0),
                           StepPolicy::adaptive_scale(1e-2, 1e-3), options(100));
  CHECK(r.a_g == doctest::Approx(0.4).epsilon(1e-10));
  CHECK(r.eps == doctest::Approx(0.04).epsilon(1e-10));
  REQUIRE(r.rows.size() == 2);
  for (const auto& row : r.rows) {
    CHECK(row.exceedance >= 0.0);
    CHECK(row.exceedance <= 1.0);
  }
}

TEST_CASE("hitting statistics and censoring") {
  const auto& d = pareto();
  const auto spec = accelerated_spec(d, speed_function(d));
  const auto policy = StepPolicy::adaptive_scale(1e-2, 1e-3);
  const auto hs = hitting_stats(spec, 5.0, 1.0, {1.0}, 2, 5.0, policy, options(500));
  CHECK(hs.n == 500);
  CHECK(hs.censored == 0);
  REQUIRE(hs.moments.size() == 2);
  CHECK(hs.moments[1].value >= hs.moments[0].value * hs.moments[0].value);
  CHECK(hs.exp_moments[0].value >= 1.0);
  CHECK_THROWS_AS(hitting_stats(spec, 5.0, 1.0, {1.0}, 2, 1e-3, policy, options(200)), HorizonTooShort);
  const auto e = sample_estimate(std::vector{1.0, 2.0, 3.0}, [](double x) { return x; });
  CHECK(e.value == doctest::Approx(2.0));
  CHECK(e.se == doctest::Approx(std::sqrt(1.0 / 3.0)));
}

TEST_CASE("initial-condition sweep summary") {
  std::vector<double> t{1.0, 2.0};
  auto make = [&](double last, double se) {
    auto c = synthetic(t, [&](double s) { return s < 2.0 ? 0.5 : last; }, 0.0);
    c.se = {se, se};
    return c;
  };
  const auto close = summarize_sweep({1.0, 10.0}, {make(0.10, 0.01), make(0.12, 0.01)});
  CHECK(close.final_spread == doctest::Approx(0.02));
  CHECK(close.pooled_se == doctest::Approx(std::sqrt(2e-4)));
  CHECK(close.collapsed);
  const auto apart = summarize_sweep({1.0, 10.0}, {make(0.10, 0.01), make(0.30, 0.01)});
  CHECK_FALSE(apart.collapsed);
  CHECK(apart.max_tv[1] == doctest::Approx(0.30));
}
