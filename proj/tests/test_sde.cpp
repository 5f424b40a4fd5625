#include <doctest.h>

#include <cmath>

#include "htd/sde.hpp"

using namespace htd;

namespace {

const TargetDensity& pareto() {
  static const TargetDensity d = make_density(ParetoShifted{5.0});
  return d;
}

}  // namespace

TEST_CASE("step policies") {
  const auto u = StepPolicy::uniform(0.01);
  CHECK(u.step(100.0, 1e6) == 0.01);
  const auto sp = StepPolicy::adaptive_speed(0.1, 1e-3);
  CHECK(sp.step(0.0, 1.0) == doctest::Approx(1e-3));
  CHECK(sp.step(0.0, 1e-5) == 0.1);
  const auto sc = StepPolicy::adaptive_scale(0.1, 1e-3);
  CHECK(sc.step(1.0, 4.0) == doctest::Approx(1e-3));
  StepPolicy bad = StepPolicy::uniform(-1.0);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = StepPolicy::adaptive_scale(0.1, 1e-3);
  bad.h_min = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("paths end at T, stay nonnegative, and carry nondecreasing local time") {
  const auto& d = pareto();
  for (const auto& spec : {langevin_spec(d), accelerated_spec(d, speed_function(d)), mean_reverting_spec(d, mean_reverting_coefficients(d))}) {
    CAPTURE(to_string(spec.kind()));
    RngStream rng(5, 1);
    const auto p = simulate_path(spec, 0.2, 2.0, StepPolicy::adaptive_scale(1e-2, 1e-3), rng);
    REQUIRE(p.size() > 10);
    CHECK(p.times.front() == 0.0);
    CHECK(p.times.back() == 2.0);
    CHECK(p.states.front() == 0.2);
    for (std::size_t i = 1; i < p.size(); ++i) {
      REQUIRE(p.times[i] > p.times[i - 1]);
      REQUIRE(p.states[i] >= 0.0);
      REQUIRE(p.local_time[i] >= p.local_time[i - 1]);
    }
  }
}

TEST_CASE("the same stream reproduces the same path") {
  const auto& d = pareto();
  const auto spec = accelerated_spec(d, speed_function(d));
  RngStream a(9, 3), b(9, 3);
  const auto p = simulate_path(spec, 10.0, 1.0, StepPolicy::adaptive_scale(1e-2, 1e-3), a);
  const auto q = simulate_path(spec, 10.0, 1.0, StepPolicy::adaptive_scale(1e-2, 1e-3), b);
  CHECK(p.states == q.states);
  CHECK(p.times == q.times);
}

TEST_CASE("reflection rules") {
  // A strong push towards zero forces many reflections.
  const auto spec = custom_spec([](double) { return -5.0; }, [](double) { return 1.0; });
  for (auto r : {Reflection::Absolute, Reflection::Projection, Reflection::Clamp}) {
    RngStream rng(1, 0);
    const auto p = simulate_path(spec.with_reflection(r), 0.5, 5.0, StepPolicy::uniform(1e-3), rng);
    CHECK(p.local_time.back() > 0.0);
    for (double x : p.states) REQUIRE(x >= 0.0);
    if (r == Reflection::Clamp) {
      CHECK(p.clamp_count > 0);
    } else {
      CHECK(p.clamp_count == 0);
    }
    if (r == Reflection::Absolute) {
      CHECK(p.zero_fraction() == 0.0);
    } else {
      CHECK(p.zero_fraction() > 0.0);
    }
  }
}

TEST_CASE("explosion and step underflow abort the path") {
  RngStream rng(2, 0);
  const auto blowup = custom_spec([](double x) { return x * x * x; }, [](double) { return 1.0; });
  CHECK_THROWS_AS(simulate_path(blowup, 10.0, 10.0, StepPolicy::uniform(0.1), rng), PathAborted);
  const auto& d = pareto();
  auto tight = StepPolicy::adaptive_scale(1e-2, 1e-3);
  tight.h_min = 1e-6;
  CHECK_THROWS_AS(simulate_path(accelerated_spec(d, speed_function(d)), 1e3, 1.0, tight, rng), PathAborted);
}

TEST_CASE("time change of a constant path") {
  const auto& d = pareto();
  const auto sf = speed_function(d);
  Path y;
  y.times = {0.0, 0.5, 1.0};
  y.states = {1.0, 1.0, 1.0};
  y.local_time = {0.0, 0.0, 0.0};
  const TimeChange tc(y, sf);
  // chi' = 1 / F(1) = 1 / 3.625.
  CHECK(tc.chi(1.0) == doctest::Approx(1.0 / 3.625).epsilon(1e-12));
  CHECK(tc.beta(0.1) == doctest::Approx(0.3625).epsilon(1e-12));
  CHECK(tc.max_slope() == doctest::Approx(1.0 / 3.625).epsilon(1e-12));
  CHECK(chi_end(y, sf) == doctest::Approx(1.0 / 3.625).epsilon(1e-12));
  const auto x = time_change_path(y, sf, 0.2);
  CHECK(x.times.back() == doctest::Approx(0.2));
  CHECK(x.states.back() == 1.0);
  CHECK_THROWS_AS(time_change_path(y, sf, 1.0), HorizonExhausted);

  const auto unit = SpeedFunction::constant(2.0);
  const TimeChange half(y, unit);
  CHECK(half.chi(1.0) == doctest::Approx(0.5));
  CHECK(half.beta(0.25) == doctest::Approx(0.5));
}

TEST_CASE("time change is monotone along a simulated path") {
  const auto& d = pareto();
  RngStream rng(4, 0);
  const auto y = simulate_path(langevin_spec(d), 3.0, 5.0, StepPolicy::adaptive_scale(1e-2, 1e-3), rng);
  const TimeChange tc(y, speed_function(d));
  for (std::size_t i = 1; i < tc.chi_values().size(); ++i) REQUIRE(tc.chi_values()[i] > tc.chi_values()[i - 1]);
  // F >= 1, so chi(t) <= t.
  CHECK(tc.chi_end() <= 5.0);
  CHECK(tc.max_slope() <= 1.0);
}
