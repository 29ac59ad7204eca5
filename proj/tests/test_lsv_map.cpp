#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "irand/lsv_map.hpp"
#include "irand/rng.hpp"

using namespace irand;

namespace {

// Test-only oracle: bisection solve of x(1+(2x)^a) = y on [0,1/2], kept
// independent of the Newton path it checks.
double left_inverse_bisect(double a, double y) {
  double lo = 0.0, hi = 0.5;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double f = mid * (1.0 + std::pow(2.0 * mid, a));
    (f < y ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("lsv_forward matches the two-branch definition") {
  MapParams half(0.5);
  CHECK(lsv_forward(half, 0.5) == 1.0);  // T(1/2) = 1 exactly, every alpha
  CHECK(lsv_forward(MapParams(2.0), 0.5) == 1.0);
  CHECK(lsv_forward(MapParams(0.3), 0.75) == 0.5);  // right branch 2x-1
  CHECK_THAT(lsv_forward(half, 0.25),
             Catch::Matchers::WithinAbs(0.4267766952966369, 1e-15));
  CHECK(lsv_forward(half, 0.0) == 0.0);
  CHECK(lsv_forward(half, 1.0) == 1.0);
  CHECK_THROWS_AS(lsv_forward(half, -0.1), std::domain_error);
  CHECK_THROWS_AS(lsv_forward(half, 1.1), std::domain_error);
  CHECK_THROWS_AS(lsv_forward(half, std::nan("")), std::domain_error);
  CHECK_THROWS_AS(MapParams(0.0), std::invalid_argument);
  CHECK_THROWS_AS(MapParams(-1.0), std::invalid_argument);
}

TEST_CASE("lsv_left_inverse endpoint and closed-form values") {
  CHECK(lsv_left_inverse(MapParams(0.7), 1.0) == 0.5);
  CHECK(lsv_left_inverse(MapParams(2.2), 0.0) == 0.0);
  // alpha = 1: 2x^2 + x = 1/2 has root (sqrt(5)-1)/4.
  CHECK_THAT(lsv_left_inverse(MapParams(1.0), 0.5),
             Catch::Matchers::WithinAbs(0.30901699437494742, 1e-14));
  CHECK_THROWS_AS(lsv_left_inverse(MapParams(1.0), 1.5), std::domain_error);
}

TEST_CASE("left inverse round-trips through the forward map") {
  for (double a : {0.3, 0.5, 0.9, 1.0, 2.0}) {
    MapParams p(a);
    Xoshiro256pp rng(derive_seed(42, static_cast<std::uint64_t>(a * 1000)));
    for (int i = 0; i < 1000; ++i) {
      const double y = rng.uniform();
      const double x = lsv_left_inverse(p, y);
      REQUIRE(x >= 0.0);
      REQUIRE(x <= 0.5);
      REQUIRE(std::fabs(lsv_forward(p, x) - y) <= 1e-12);
    }
  }
}

TEST_CASE("forward map strictly increasing on each branch, inverse increasing") {
  MapParams p(0.8);
  double prev_left = -1.0, prev_right = -1.0, prev_inv = -1.0;
  for (int i = 0; i <= 2000; ++i) {
    const double u = static_cast<double>(i) / 2000.0;
    const double xl = 0.5 * u;
    REQUIRE(lsv_forward(p, xl) > prev_left);
    prev_left = lsv_forward(p, xl);
    const double xr = 0.5 + 0.5 * u;
    if (xr > 0.5) {
      REQUIRE(lsv_forward(p, xr) > prev_right);
      prev_right = lsv_forward(p, xr);
    }
    const double inv = lsv_left_inverse(p, u);
    REQUIRE(inv >= prev_inv);
    prev_inv = inv;
  }
}

TEST_CASE("fast-path exponents agree with std::pow") {
  for (double a : {0.5, 0.75, 1.0, 2.0, 3.0}) {
    MapParams p(a);
    for (int i = 1; i <= 100; ++i) {
      const double x = 0.5 * static_cast<double>(i) / 100.0;
      const double ref = std::pow(2.0 * x, a);
      REQUIRE_THAT(p.gap(x), Catch::Matchers::WithinRel(ref, 1e-14));
    }
  }
}

TEST_CASE("Taylor sandwich: 1 - a x <= (1+x)^-a <= 1 - a x + a(1+a)x^2/2") {
  for (double a : {0.25, 0.5, 1.0, 2.0, 5.0}) {
    for (int i = 0; i <= 1000; ++i) {
      const double x = static_cast<double>(i) / 1000.0;
      const double mid = std::pow(1.0 + x, -a);
      const double lowr = 1.0 - a * x;
      const double uppr = 1.0 - a * x + 0.5 * a * (1.0 + a) * x * x;
      REQUIRE(lowr <= mid + 1e-15);
      REQUIRE(mid <= uppr + 1e-15);
      if (x > 1e-3) {
        REQUIRE(lowr < mid);
        REQUIRE(mid < uppr);
      }
    }
  }
}

TEST_CASE("deterministic backward orbit: values and decay law") {
  SECTION("alpha = 1 closed-form quadratic roots") {
    const auto xs = deterministic_xseq(MapParams(1.0), 3);
    REQUIRE(xs.size() == 3);
    CHECK(xs[0] == 0.5);
    CHECK_THAT(xs[1], Catch::Matchers::WithinAbs(0.30901699437494742, 1e-14));
    CHECK_THAT(xs[2], Catch::Matchers::WithinAbs(0.21584170829528963, 1e-14));
    // independent oracle: same roots by bisection
    CHECK_THAT(xs[2], Catch::Matchers::WithinAbs(
                          left_inverse_bisect(1.0, left_inverse_bisect(1.0, 0.5)),
                          1e-13));
  }
  SECTION("single-element sequence") {
    const auto xs = deterministic_xseq(MapParams(1.0), 1);
    REQUIRE(xs == std::vector<double>{0.5});
  }
  SECTION("n^{1/a} x_n approaches c(alpha) within 1% and improves") {
    for (double a : {0.5, 0.75}) {
      const double target = c_alpha(a);
      const std::size_t N = 200000;
      const auto xs = deterministic_xseq(MapParams(a), N);
      auto cn = [&](std::size_t n) {
        return std::pow(static_cast<double>(n), 1.0 / a) * xs[n - 1];
      };
      const double devN = std::fabs(cn(N) - target);
      REQUIRE(devN < 0.01 * target);
      // eventually decreasing: compare across the last decades
      REQUIRE(devN <= std::fabs(cn(N / 10) - target));
      REQUIRE(std::fabs(cn(N / 10) - target) <= std::fabs(cn(N / 100) - target));
    }
  }
  SECTION("strictly decreasing") {
    const auto xs = deterministic_xseq(MapParams(0.5), 5000);
    for (std::size_t i = 1; i < xs.size(); ++i) REQUIRE(xs[i] < xs[i - 1]);
  }
}

TEST_CASE("c_alpha reference values") {
  CHECK_THAT(c_alpha(0.5), Catch::Matchers::WithinAbs(2.0, 1e-15));
  CHECK_THAT(c_alpha(1.0), Catch::Matchers::WithinAbs(0.5, 1e-15));
  CHECK_THAT(c_alpha(0.75),
             Catch::Matchers::WithinAbs(0.73376161086547260, 1e-15));
}
