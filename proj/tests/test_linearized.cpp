#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "irand/induced.hpp"
#include "irand/linearized.hpp"
#include "irand/observables.hpp"

using namespace irand;

TEST_CASE("linearized step: right branch and basic invariants") {
  ModelParams mp(2.0, 3.0, 0.5);
  LinearizedState s(0.9, mp, 5);
  REQUIRE(linearized_step(s, mp));
  CHECK_THAT(s.x, Catch::Matchers::WithinAbs(0.8, 1e-15));
  CHECK(s.in_delta0());
  CHECK(s.steps == 1);
  for (int i = 0; i < 3000; ++i) {
    REQUIRE(linearized_step(s, mp));
    REQUIRE(s.x >= 0.0);
    REQUIRE(s.x <= 1.0);
  }
}

TEST_CASE("branch image matches the hand-evaluated affine formula") {
  // x interior to (x_3(w), x_2(w)]: image is
  // (x_1(phi w) - x_2(phi w))/(x_2(w) - x_3(w)) (x - x_3(w)) + x_2(phi w).
  ModelParams mp(2.0, 3.0, 0.5);
  const std::uint64_t seed = 99;
  SymbolStream probe(mp, seed);
  auto view = probe.view(16);
  const double x3 = quenched_xn(view, 3, mp);
  const double x2 = quenched_xn(view, 2, mp);
  const double x2s = quenched_xn(view.subspan(1), 2, mp);  // x_2(phi w)
  const double x1s = 0.5;                                  // x_1(phi w)
  const double y = x3 + 0.37 * (x2 - x3);

  // drive a linearized state into that branch: start in Delta_0 at the
  // preimage (y+1)/2 so the first step lands exactly on y's branch
  LinearizedState s(0.5 * (y + 1.0), mp, seed);
  // first step consumes symbol 0; the branch structure of y is read from
  // phi w, so rebuild the expected breakpoints on the shifted string
  const double y_after = 2.0 * (0.5 * (y + 1.0)) - 1.0;
  REQUIRE(std::fabs(y_after - y) <= 1e-15);
  REQUIRE(linearized_step(s, mp));
  REQUIRE(s.branch >= 2);
  // now mid-excursion; the next step applies the affine branch map of the
  // shifted itinerary: compare against the formula built from quenched_xn
  const double xm = quenched_xn(view.subspan(1), static_cast<std::size_t>(s.branch), mp);
  const double xm1 = quenched_xn(view.subspan(1), static_cast<std::size_t>(s.branch) - 1, mp);
  const double im1 = quenched_xn(view.subspan(2), static_cast<std::size_t>(s.branch) - 1, mp);
  const double im2 = s.branch == 2
                         ? 1.0
                         : quenched_xn(view.subspan(2),
                                       static_cast<std::size_t>(s.branch) - 2, mp);
  const double expected = (im2 - im1) / (xm1 - xm) * (s.x - xm) + im1;
  REQUIRE(linearized_step(s, mp));
  CHECK_THAT(s.x, Catch::Matchers::WithinAbs(expected, 1e-11));
  (void)x1s;
  (void)x2s;
}

TEST_CASE("cached bracket diagonals agree with quenched recomputation") {
  ModelParams mp(2.0, 3.0, 0.5);
  for (std::uint64_t rep = 0; rep < 50; ++rep) {
    const std::uint64_t seed = derive_seed(777, rep);
    Xoshiro256pp rng(seed);
    LinearizedState s(0.5 + 0.5 * rng.uniform_open0(), mp, seed);
    REQUIRE(linearized_step(s, mp));
    if (s.branch == 0) continue;
    SymbolStream probe(mp, seed);
    const auto m = static_cast<std::size_t>(s.branch);
    auto view = probe.view(m + 2);
    for (std::size_t i = 0; i + 1 < std::min<std::size_t>(m, 6); ++i) {
      // lower[i] = x_{m-i}(phi^{1+i} w), upper[i] = x_{m-1-i}(phi^{1+i} w)
      const double lo = quenched_xn(view.subspan(1 + i), m - i, mp);
      REQUIRE(std::fabs(s.lower[i] - lo) <= 1e-12);
      if (m - 1 - i >= 1) {
        const double hi = quenched_xn(view.subspan(1 + i), m - 1 - i, mp);
        REQUIRE(std::fabs(s.upper[i] - hi) <= 1e-12);
      }
    }
  }
}

TEST_CASE("induced step equals iterated linearized steps") {
  ModelParams mp(2.0, 3.0, 0.5);
  std::size_t multi = 0;
  for (std::uint64_t rep = 0; rep < 300; ++rep) {
    const std::uint64_t seed = derive_seed(4141, rep);
    Xoshiro256pp rng(seed);
    const double x0 = 0.5 + 0.5 * rng.uniform_open0();
    LinearizedState a(x0, mp, seed);
    LinearizedState b(x0, mp, seed);
    const auto step = induced_affine_step(a, mp);
    REQUIRE_FALSE(step.capped);
    std::uint64_t r = 0;
    do {
      REQUIRE(linearized_step(b, mp));
      ++r;
    } while (!b.in_delta0());
    REQUIRE(step.R == r);
    REQUIRE(a.x == b.x);
    REQUIRE(a.steps == b.steps);
    REQUIRE(a.stream.offset() == b.stream.offset());
    multi += r > 3;
  }
  CHECK(multi > 20);
}

TEST_CASE("induced map branches are affine and onto") {
  ModelParams mp(2.0, 3.0, 0.5);
  std::size_t affine_checked = 0, onto_checked = 0;
  for (std::uint64_t rep = 0; rep < 1000 && (affine_checked < 300 || onto_checked < 100); ++rep) {
    const std::uint64_t seed = derive_seed(9090, rep);
    Xoshiro256pp rng(seed);
    const double x0 = 0.5 + 0.5 * rng.uniform_open0();
    LinearizedState probe(x0, mp, seed);
    const auto st = induced_affine_step(probe, mp);
    REQUIRE_FALSE(st.capped);
    if (st.R < 2) continue;

    // entry bracket of the return cell in Delta_0: J_m = (x'_m, x'_{m-1}]
    SymbolStream ps(mp, seed);
    const auto m = static_cast<std::size_t>(st.R);
    const double xpm = quenched_xprime(ps, m, mp);
    const double xpm1 = quenched_xprime(ps, m - 1, mp);

    {
      // affinity: three points in the same return cell stay collinear
      const double u1 = xpm + 0.2 * (xpm1 - xpm);
      const double u2 = xpm + 0.5 * (xpm1 - xpm);
      const double u3 = xpm + 0.8 * (xpm1 - xpm);
      double img[3];
      const double us[3] = {u1, u2, u3};
      bool same_cell = true;
      for (int k = 0; k < 3; ++k) {
        LinearizedState s(us[k], mp, seed);
        const auto r2 = induced_affine_step(s, mp);
        if (r2.R != st.R) same_cell = false;
        img[k] = s.x;
      }
      if (same_cell) {
        const double lhs = (img[1] - img[0]) / (img[2] - img[0]);
        const double rhs = (us[1] - us[0]) / (us[2] - us[0]);
        REQUIRE(std::fabs(lhs - rhs) < 1e-9);
        ++affine_checked;
        // onto: cell endpoints map to the limits 1/2 and 1
        // the Delta_0 preimage (v+1)/2 rounds v at 2^-53; the induced
        // image magnifies that by 1/width(J_m), so keep the sharp endpoint
        // check to cells of moderate depth
        if (st.R <= 100) {
          LinearizedState hi(xpm1, mp, seed);
          const auto rhi = induced_affine_step(hi, mp);
          if (rhi.R == st.R) {
            REQUIRE(std::fabs(hi.x - 1.0) < 1e-9);
            ++onto_checked;
          }
        }
        LinearizedState lo(xpm + 1e-12 * (xpm1 - xpm), mp, seed);
        const auto rlo = induced_affine_step(lo, mp);
        if (rlo.R == st.R) REQUIRE(std::fabs(lo.x - 0.5) < 1e-6);
      }
    }
  }
  CHECK(affine_checked >= 300);
  CHECK(onto_checked >= 100);
}

TEST_CASE("linearized return times match the LSV breakpoint search exactly") {
  // The linearized model shares the J_n(w) geometry with the LSV model.
  ModelParams mp(2.0, 3.0, 0.5);
  std::size_t checked = 0;
  for (std::uint64_t rep = 0; rep < 2000; ++rep) {
    const std::uint64_t seed = derive_seed(606060, rep);
    Xoshiro256pp rng(derive_seed(seed, 9));
    const double x0 = 0.5 + 0.5 * rng.uniform_open0();
    LinearizedState s(x0, mp, seed);
    const auto st = induced_affine_step(s, mp);
    // excursions past the depth cap would also stall the bracketing search;
    // skip them (the cap itself is exercised elsewhere)
    if (st.capped) continue;
    SymbolStream probe(mp, seed);
    REQUIRE(return_time_locate(x0, probe, mp) == st.R);
    ++checked;
  }
  CHECK(checked >= 1995);
}

TEST_CASE("deep excursions hit the configured cap and are surfaced") {
  ModelParams mp(2.0, 3.0, 0.5);
  // x extremely close to 1/2 launches a very deep excursion
  LinearizedState s(0.5 + 1e-12, mp, 3);
  const auto st = induced_affine_step(s, mp, 1000);
  CHECK(st.capped);
  CHECK(s.cap_hits == 1);
  CHECK(s.x == 0.5 + 1e-12);  // state untouched
}

TEST_CASE("nu_Delta0 sampling: stationarity diagnostics at (1, 2)") {
  ModelParams mp(1.0, 2.0, 0.5);
  NuDelta0Options opts;
  opts.depth_cap = 100000;

  auto b1 = sample_nu_delta0(mp, 1000, 1500, 11, 2, opts);
  auto b2 = sample_nu_delta0(mp, 2000, 1500, 12, 2, opts);
  std::vector<double> x1, x2;
  for (auto& s : b1.states) x1.push_back(s.x);
  for (auto& s : b2.states) x2.push_back(s.x);

  SECTION("burn-in length does not move the marginal") {
    // two-sample KS null 95% level at M = 1500 is ~0.0497; allow 0.065
    CHECK(ks_two_sample(x1, x2) < 0.065);
  }

  SECTION("one induced step preserves the marginal") {
    std::vector<double> pushed;
    for (auto& s : b1.states) {
      const auto st = induced_affine_step(s, mp, 1000000);
      if (!st.capped) pushed.push_back(s.x);
    }
    CHECK(ks_two_sample(x1, pushed) <
          1.63 * std::sqrt(2.0 / static_cast<double>(pushed.size())) + 0.02);
  }

  SECTION("chain mode agrees with independent mode") {
    NuDelta0Options chain_opts = opts;
    chain_opts.chains = 16;
    chain_opts.thin = 5;
    auto b3 = sample_nu_delta0(mp, 1000, 1500, 13, 2, chain_opts);
    std::vector<double> x3;
    for (auto& s : b3.states) x3.push_back(s.x);
    CHECK(ks_two_sample(x1, x3) < 0.06);
  }

  SECTION("burn-in precondition") {
    CHECK_THROWS_AS(sample_nu_delta0(mp, 10, 100, 1, 1), std::invalid_argument);
  }
}

TEST_CASE("degenerate randomness: induced marginal matches a long trajectory") {
  // p1 = 1, alpha = 1: the linearized system is deterministic; the sampled
  // induced marginal must match the histogram of one long induced orbit.
  ModelParams mp(1.0, 2.0, 1.0);
  NuDelta0Options opts;
  opts.depth_cap = 1000000;
  auto batch = sample_nu_delta0(mp, 1000, 2000, 21, 2, opts);
  std::vector<double> xs;
  for (auto& s : batch.states) xs.push_back(s.x);

  LinearizedState t(0.5 + 0.5 * 0.7319, mp, 5);
  std::vector<double> traj;
  for (int k = 0; k < 20000; ++k) {
    const auto st = induced_affine_step(t, mp, 1000000);
    REQUIRE_FALSE(st.capped);
    if (k > 200) traj.push_back(t.x);
  }
  CHECK(ks_two_sample(xs, traj) < 0.05);
}

TEST_CASE("truncated return growth: control run converges for alpha < 1") {
  ModelParams mp(0.5, 2.0, 0.5);
  const std::uint64_t caps[] = {100, 10000, 1000000};
  const auto rep = truncated_return_growth(mp, caps, 100000, 31, 2);
  CHECK(rep.points[2].mean_min_r - rep.points[0].mean_min_r <
        0.05 * rep.points[0].mean_min_r);
  CHECK(rep.points[2].mean_min_r >= rep.points[1].mean_min_r);
}

TEST_CASE("infinite correlation: degenerate and structural cases") {
  ModelParams mp(2.0, 3.0, 0.5);
  NuDelta0Options opts;
  opts.chains = 8;
  opts.thin = 3;

  SECTION("f = 0 gives identically zero estimates") {
    const std::uint64_t grid[] = {10, 100};
    auto rep = infinite_correlation([](double) { return 0.0; },
                                    [](double x) { return x; }, mp, grid, 500,
                                    77, 2, 1000, opts);
    for (const auto& pt : rep.points) CHECK(pt.estimate == 0.0);
  }

  SECTION("n = 0 recovers the second moment under nu_Delta0") {
    auto bump = [](double x) { return smooth_bump(x, 0.6, 0.9); };
    const std::uint64_t grid[] = {0, 50};
    auto rep = infinite_correlation(bump, bump, mp, grid, 4000, 78, 2, 1000, opts);
    auto batch = sample_nu_delta0(mp, 1000, 4000, 1778, 2, opts);
    std::vector<double> sq;
    for (auto& s : batch.states) {
      const double b = bump(s.x);
      sq.push_back(b * b);
    }
    const auto ms = mean_stderr(sq);
    CHECK(std::fabs(rep.points[0].estimate - ms.mean) <=
          3.0 * std::sqrt(ms.stderr_ * ms.stderr_ +
                          rep.points[0].stderr_ * rep.points[0].stderr_) + 0.01);
  }

  SECTION("alpha = 1 normalization column uses 1/ln n") {
    ModelParams m1(1.0, 2.0, 0.5);
    const std::uint64_t grid[] = {100, 1000};
    NuDelta0Options o1;
    o1.chains = 8;
    o1.depth_cap = 100000;
    auto rep = infinite_correlation([](double x) { return smooth_bump(x, 0.6, 0.9); },
                                    [](double x) { return smooth_bump(x, 0.6, 0.9); },
                                    m1, grid, 2000, 79, 2, 1000, o1);
    CHECK_THAT(rep.points[0].normalizer,
               Catch::Matchers::WithinRel(1.0 / std::log(100.0), 1e-12));
    CHECK(rep.points[0].estimate > 0.0);
    CHECK(rep.points[1].estimate < rep.points[0].estimate);
  }
}
