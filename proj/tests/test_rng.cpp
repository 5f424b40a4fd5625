#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "htd/rng.hpp"

using namespace htd;

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and independent of the stream count") {
  RngStream a(123, 7), b(123, 7), c(123, 8), d(124, 7);
  bool differs_index = false, differs_seed = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    CHECK(x == b());
    differs_index = differs_index || x != c();
    differs_seed = differs_seed || x != d();
  }
  CHECK(differs_index);
  CHECK(differs_seed);

  auto few = make_streams(9, 3);
  auto many = make_streams(9, 300);
  for (int i = 0; i < 50; ++i) CHECK(few[2].normal() == many[2].normal());
  CHECK_THROWS(make_streams(9, 0));
}

TEST_CASE("derived seeds separate tags") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t tag = 0; tag < 1000; ++tag) seen.insert(derive_seed(42, tag));
  CHECK(seen.size() == 1000);
  CHECK(derive_seed(42, 5) == derive_seed(42, 5));
  CHECK(derive_seed(42, 5) != derive_seed(43, 5));
}

TEST_CASE("uniforms lie in the open unit interval with the right moments") {
  RngStream s(1, 0);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sum2 += u * u;
  }
  CHECK(std::abs(sum / n - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::abs(sum2 / n - 1.0 / 3.0) < 5e-3);
}

TEST_CASE("both normal generators have zero mean, unit variance and matching tails") {
  for (auto method : {NormalMethod::Polar, NormalMethod::InverseCdf}) {
    RngStream s(2, 5, method);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
    int beyond2 = 0;
    for (int i = 0; i < n; ++i) {
      const double z = s.normal();
      sum += z;
      sum2 += z * z;
      sum4 += z * z * z * z;
      beyond2 += std::abs(z) > 2.0;
    }
    CAPTURE(to_string(method));
    CHECK(std::abs(sum / n) < 5.0 / std::sqrt(n));
    CHECK(std::abs(sum2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(sum4 / n - 3.0) < 5.0 * std::sqrt(96.0 / n));
    const double p2 = std::erfc(2.0 / std::sqrt(2.0));
    CHECK(std::abs(static_cast<double>(beyond2) / n - p2) < 5.0 * std::sqrt(p2 * (1 - p2) / n));
  }
}

TEST_CASE("streams satisfy the standard URBG contract") {
  RngStream s(3, 0);
  std::uniform_int_distribution<int> die(1, 6);
  int counts[7] = {};
  for (int i = 0; i < 60000; ++i) ++counts[die(s)];
  for (int k = 1; k <= 6; ++k) CHECK(std::abs(counts[k] - 10000) < 500);
}
