#include <doctest.h>

#include <cmath>

#include "htd/numerics.hpp"

using namespace htd;

TEST_CASE("adaptive quadrature reproduces elementary integrals") {
  CHECK(quad::adaptive([](double x) { return x * x * x; }, 0.0, 1.0) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(quad::adaptive([](double x) { return std::sin(x); }, 0.0, M_PI) == doctest::Approx(2.0).epsilon(1e-13));
  // int_0^b (1 + x)^-5 = (1 - (1 + b)^-4) / 4 over four decades.
  const double b = 1e4;
  const double exact = (1.0 - std::pow(1.0 + b, -4.0)) / 4.0;
  CHECK(quad::adaptive_geometric([](double x) { return std::pow(1.0 + x, -5.0); }, 0.0, b) ==
        doctest::Approx(exact).epsilon(1e-12));
}

TEST_CASE("20-point Gauss-Legendre is exact to degree 39") {
  CHECK(quad::gauss20([](double x) { return std::pow(x, 39); }, 0.0, 1.0) == doctest::Approx(1.0 / 40.0).epsilon(1e-13));
  CHECK(quad::gauss20([](double x) { return 3.0 * x * x; }, -2.0, 1.0) == doctest::Approx(9.0).epsilon(1e-14));
}

TEST_CASE("geometric grid pins both ends with a common ratio in 1 + z") {
  const auto g = geometric_grid(0.0, 100.0, 1.05);
  // ceil(ln 101 / ln 1.05) = 95 cells.
  REQUIRE(g.size() == 96);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 100.0);
  const double r = std::pow(101.0, 1.0 / 95.0);
  CHECK(r <= 1.05);
  for (std::size_t i = 1; i < g.size(); ++i) CHECK((1.0 + g[i]) / (1.0 + g[i - 1]) == doctest::Approx(r).epsilon(1e-12));
}

TEST_CASE("quintic Hermite table is exact on a quintic") {
  auto p = [](double z) { return std::pow(z, 5) - 2.0 * z * z * z + z; };
  auto dp = [](double z) { return 5.0 * std::pow(z, 4) - 6.0 * z * z + 1.0; };
  auto d2p = [](double z) { return 20.0 * z * z * z - 12.0 * z; };
  const std::vector<double> nodes{0.0, 0.5, 1.5, 3.0};
  std::vector<double> v, d1, d2;
  for (double z : nodes) {
    v.push_back(p(z));
    d1.push_back(dp(z));
    d2.push_back(d2p(z));
  }
  const HermiteTable t(nodes, v, d1, d2);
  for (double z : {0.1, 0.7, 1.2, 2.9}) {
    CHECK(t(z) == doctest::Approx(p(z)).epsilon(1e-12));
    CHECK(t.derivative(z) == doctest::Approx(dp(z)).epsilon(1e-11));
  }
}

TEST_CASE("cumulative tables integrate forward and backward") {
  auto g = [](double x) { return 1.0 / ((1.0 + x) * (1.0 + x)); };
  auto dg = [](double x) { return -2.0 / std::pow(1.0 + x, 3); };
  const double z_max = 1e3;
  const auto fwd = cumulative_table(g, dg, z_max, 1.01);
  const auto bwd = cumulative_table(g, dg, z_max, 1.01, Accumulate::Backward, 1.0 / (1.0 + z_max));
  for (double z : {0.0, 0.3, 7.0, 250.0, 999.0}) {
    CHECK(fwd(z) == doctest::Approx(1.0 - 1.0 / (1.0 + z)).epsilon(1e-10));
    // Backward plus the exact tail beyond z_max gives int_z^inf = 1 / (1 + z).
    CHECK(bwd(z) == doctest::Approx(1.0 / (1.0 + z)).epsilon(1e-10));
  }
}
