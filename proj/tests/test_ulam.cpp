#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "irand/ulam.hpp"

using namespace irand;

TEST_CASE("grid construction: monotone breakpoints, half the cells near zero") {
  const auto grid = UlamGrid::geometric(1024, 1e-6);
  REQUIRE(grid.cells() == 1024);
  CHECK(grid.b.front() == 0.0);
  CHECK(grid.b.back() == 1.0);
  std::size_t below = 0;
  for (std::size_t j = 0; j < grid.cells(); ++j) {
    REQUIRE(grid.width(j) > 0.0);
    if (grid.right(j) <= 0.1 + 1e-12) ++below;
  }
  CHECK(below >= grid.cells() / 2);
  CHECK(grid.locate(0.0) == 0);
  CHECK(grid.locate(1.0) == grid.cells() - 1);
  const std::size_t j = grid.locate(0.35);
  CHECK(grid.left(j) < 0.35);
  CHECK(0.35 <= grid.right(j));
  CHECK_THROWS_AS(grid.locate(-0.1), std::domain_error);
}

TEST_CASE("ulam matrix rows are stochastic") {
  ModelParams mp(0.5, 0.75, 0.5);
  const auto grid = UlamGrid::geometric(512, 1e-6);
  const auto m = ulam_matrix(grid, mp, 2);
  REQUIRE(m.size == 512);
  for (std::size_t i = 0; i < m.size; ++i) {
    REQUIRE_THAT(m.row_sum(i), Catch::Matchers::WithinAbs(1.0, 1e-12));
    for (std::size_t k = m.row_begin[i]; k < m.row_begin[i + 1]; ++k)
      REQUIRE(m.val[k] >= 0.0);
  }
}

TEST_CASE("p1 = 1 reduces to the single-map Ulam matrix") {
  const auto grid = UlamGrid::geometric(256, 1e-5);
  ModelParams mixed(0.5, 0.75, 1.0);
  const auto m1 = ulam_matrix(grid, mixed, 1);
  // alpha-map alone via a mixture that never draws Slow
  ModelParams alpha_only(0.5, 9.0, 1.0);
  const auto m2 = ulam_matrix(grid, alpha_only, 1);
  REQUIRE(m1.col == m2.col);
  for (std::size_t k = 0; k < m1.val.size(); ++k)
    REQUIRE_THAT(m1.val[k], Catch::Matchers::WithinAbs(m2.val[k], 1e-14));
}

TEST_CASE("cell at the origin self-transitions more as cells shrink") {
  ModelParams mp(0.5, 0.75, 0.5);
  double prev = 0.0;
  for (double xmin : {1e-3, 1e-5, 1e-7}) {
    const auto grid = UlamGrid::geometric(256, xmin);
    const auto m = ulam_matrix(grid, mp, 1);
    double self = 0.0;
    for (std::size_t k = m.row_begin[0]; k < m.row_begin[1]; ++k)
      if (m.col[k] == 0) self = m.val[k];
    CHECK(self > prev);
    prev = self;
  }
  CHECK(prev > 0.99);
}

TEST_CASE("invariant density: convergence, invariance, normalization") {
  ModelParams mp(0.5, 0.75, 0.5);
  const auto grid = UlamGrid::geometric(2048, 1e-7);
  const auto m = ulam_matrix(grid, mp, 2);
  const auto res =
      invariant_density(m, grid, 1e-10, 60000, DensityInit::PowerLaw, 0.5, 2);
  REQUIRE(res.converged);
  CHECK(res.residual_l1 < 1e-9);
  CHECK_THAT(res.density.total(), Catch::Matchers::WithinAbs(1.0, 1e-10));

  SECTION("pushing the fixed density once moves each cell mass < 10 tol") {
    const auto pull = transpose(m);
    for (std::size_t j = 0; j < grid.cells(); ++j) {
      double acc = 0.0;
      for (std::size_t k = pull.row_begin[j]; k < pull.row_begin[j + 1]; ++k)
        acc += pull.val[k] * res.density.mass[pull.col[k]];
      REQUIRE(std::fabs(acc - res.density.mass[j]) < 1e-9);
    }
  }

  SECTION("density blows up near zero with a measured negative exponent") {
    const double slope = density_slope_at_zero(res.density, 1e-6, 1e-3);
    CHECK(slope < -0.3);
    CHECK(slope > -1.0);
  }

  SECTION("uniform start converges to the same fixed point") {
    const auto res2 =
        invariant_density(m, grid, 1e-10, 60000, DensityInit::Uniform, 0.5, 2);
    CHECK(density_l1_distance(res.density, res2.density) < 1e-6);
  }
}

TEST_CASE("grid refinement: L1 gap between successive resolutions shrinks") {
  ModelParams mp(0.5, 0.75, 0.5);
  std::vector<DensityEstimate> ds;
  for (std::size_t K : {512u, 1024u, 2048u}) {
    const auto grid = UlamGrid::geometric(K, 1e-7);
    const auto m = ulam_matrix(grid, mp, 2);
    ds.push_back(
        invariant_density(m, grid, 1e-10, 60000, DensityInit::PowerLaw, 0.5, 2)
            .density);
  }
  const double gap01 = density_l1_distance(ds[0], ds[1]);
  const double gap12 = density_l1_distance(ds[1], ds[2]);
  CHECK(gap12 < gap01);
}

TEST_CASE("cone check accepts the computed density and rejects foils") {
  ModelParams mp(0.5, 0.75, 0.5);
  const auto grid = UlamGrid::geometric(1024, 1e-7);
  const auto m = ulam_matrix(grid, mp, 2);
  const auto res =
      invariant_density(m, grid, 1e-10, 60000, DensityInit::PowerLaw, 0.5, 2);

  SECTION("computed density passes with a = 4/(1-beta)") {
    const auto rep = cone_check(res.density, mp.beta);
    CHECK(rep.pass());
    CHECK(rep.a_used == 16.0);
    CHECK(rep.worst_integral_ratio < 1.0);
  }
  SECTION("constant density passes trivially") {
    DensityEstimate flat;
    flat.grid = grid;
    flat.mass.resize(grid.cells());
    for (std::size_t j = 0; j < grid.cells(); ++j) flat.mass[j] = grid.width(j);
    CHECK(cone_check(flat, 0.75).pass());
  }
  SECTION("increasing density fails monotonicity") {
    DensityEstimate inc;
    inc.grid = grid;
    inc.mass.resize(grid.cells());
    for (std::size_t j = 0; j < grid.cells(); ++j)
      inc.mass[j] = grid.width(j) * (1.0 + grid.mid(j));
    CHECK_FALSE(cone_check(inc, 0.75).decreasing);
    CHECK_FALSE(cone_check(inc, 0.75).pass());
  }
  SECTION("beta >= 1 rejected") {
    CHECK_THROWS_AS(cone_check(res.density, 1.0), std::invalid_argument);
  }
}
