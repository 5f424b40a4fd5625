#include <doctest.h>

#include <cmath>

#include "htd/density.hpp"

using namespace htd;

namespace {

std::vector<DensityModel> models() {
  return {ParetoShifted{5.0}, HalfStudentLike{4.0, 1.0}, PerturbedPareto{5.0, 0.3}};
}

double integrate(const TargetDensity& d, const RealFn& f, double b) {
  return quad::adaptive_geometric([&](double x) { return f(x) * d.pdf(x); }, 0.0, b, 1e-11);
}

}  // namespace

TEST_CASE("every model integrates to one") {
  for (const auto& m : models()) {
    const auto d = make_density(m);
    CAPTURE(describe(m));
    // Mass beyond 1e6 is below 1e-18 for these tails.
    CHECK(integrate(d, [](double) { return 1.0; }, 1e6) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("Pareto closed forms") {
  const auto d = make_density(ParetoShifted{5.0});
  CHECK(d.pdf(0.0) == doctest::Approx(4.0));
  CHECK(d.pdf(1.0) == doctest::Approx(4.0 / 32.0));
  CHECK(d.mean() == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(d.cdf(1.0) == doctest::Approx(1.0 - 1.0 / 16.0));
  CHECK(d.tail_exponent() == 5.0);
  CHECK(d.log_pdf_derivative(3.0) == doctest::Approx(-5.0 / 4.0));
}

TEST_CASE("half-Student m = 4 normalization and speed integral") {
  const auto d = make_density(HalfStudentLike{4.0, 1.0});
  // int_0^inf (1 + x^2)^-2 dx = pi / 4, so pi(0) = 4 / pi.
  CHECK(d.pdf(0.0) == doctest::Approx(4.0 / M_PI).epsilon(1e-12));
  // int_0^z (1 + y^2)^2 dy = z + 2 z^3 / 3 + z^5 / 5.
  for (double z : {0.5, 2.0, 10.0}) {
    const double oracle = (M_PI / 4.0) * (z + 2.0 * z * z * z / 3.0 + std::pow(z, 5) / 5.0);
    CHECK(d.closed_speed_integral(z) == doctest::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("cdf and mean agree with direct quadrature") {
  for (const auto& m : models()) {
    const auto d = make_density(m);
    CAPTURE(describe(m));
    for (double z : {0.0, 0.4, 3.0, 40.0, 2000.0}) {
      const double oracle = quad::adaptive_geometric([&](double x) { return d.pdf(x); }, 0.0, z, 1e-12);
      CHECK(d.cdf(z) == doctest::Approx(oracle).epsilon(1e-9));
    }
    CHECK(d.mean() == doctest::Approx(integrate(d, [](double x) { return x; }, 1e7)).epsilon(1e-6));
  }
}

TEST_CASE("quantile inverts the cdf") {
  for (const auto& m : models()) {
    const auto d = make_density(m);
    for (double p : {1e-6, 0.1, 0.5, 0.9, 0.999, 0.999999}) CHECK(d.cdf(d.quantile(p)) == doctest::Approx(p).epsilon(1e-9));
  }
}

TEST_CASE("numeric paths match closed forms") {
  DensityOptions numeric;
  numeric.use_closed_forms = false;
  const auto a = make_density(ParetoShifted{5.0});
  const auto b = make_density(ParetoShifted{5.0}, numeric);
  CHECK_FALSE(b.closed_forms().cdf);
  for (double z : {0.2, 5.0, 500.0}) CHECK(b.cdf(z) == doctest::Approx(a.cdf(z)).epsilon(1e-9));
  CHECK(b.mean() == doctest::Approx(a.mean()).epsilon(1e-7));
}

TEST_CASE("power-law envelope holds on a dense grid") {
  const auto grid = geometric_grid(0.0, 1e4, 1.01);
  for (const auto& m : models()) {
    const auto d = make_density(m);
    const auto e = verify_envelope(d, grid);
    CAPTURE(describe(m));
    CHECK(e.pass);
    CHECK(e.c_low >= d.envelope_c() * (1.0 - 1e-12));
    CHECK(e.c_high <= (1.0 + 1e-12) / d.envelope_c());
  }
}

TEST_CASE("invalid parameters are rejected") {
  CHECK_THROWS_AS(make_density(ParetoShifted{3.0}), std::invalid_argument);
  CHECK_THROWS_AS(make_density(ParetoShifted{2.5}), std::invalid_argument);
  CHECK_THROWS_AS(make_density(HalfStudentLike{4.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(make_density(PerturbedPareto{5.0, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(make_density(ParetoShifted{NAN}), std::invalid_argument);
}
