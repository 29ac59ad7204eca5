#pragma once

// Piecewise affine (linearized) version of the random model. The left part
// of T~ maps each branch interval (x_n(w), x_{n-1}(w)] affinely ONTO
// (x_{n-1}(phi w), x_{n-2}(phi w)], so the map is Markov by construction and
// the relative coordinate inside a branch is invariant along an excursion.
//
// Branch location uses an exact equivalence instead of deep breakpoint
// tables: y lies in branch m at shift j iff its quenched LSV forward orbit
// (the original nonlinear maps, itinerary read from shift j) escapes above
// 1/2 in exactly m-1 steps, because T_s maps x_k(phi^j w) to
// x_{k-1}(phi^{j+1} w) monotonically. One backward pass per excursion then
// yields both bracketing diagonals x_{m-i}(phi^i .) and x_{m-1-i}(phi^i .),
// which are exactly the breakpoints the excursion will visit.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "irand/parallel.hpp"
#include "irand/quenched.hpp"
#include "irand/stats.hpp"
#include "irand/symbols.hpp"

namespace irand {

struct LinearizedState {
  double x = 1.0;
  SymbolStream stream;            // offset = current shift of omega
  std::uint64_t steps = 0;
  std::uint64_t cap_hits = 0;     // branch searches that exhausted the cap

  // excursion bookkeeping: branch > 0 means x is in branch (branch - pos)
  // with relative coordinate rel; lower/upper are the bracketing diagonals
  // lower[i] = x_{m-i}(phi^i .), upper[i] = x_{m-1-i}(phi^i .) from entry.
  std::uint64_t branch = 0;
  std::uint64_t pos = 0;
  double rel = 0.0;
  std::vector<double> lower, upper;

  LinearizedState(double x0, SymbolStream s) : x(x0), stream(std::move(s)) {}
  LinearizedState(double x0, const ModelParams& mp, std::uint64_t seed)
      : x(x0), stream(mp, seed) {}

  bool in_delta0() const { return branch == 0; }
};

inline constexpr std::uint64_t kDefaultDepthCap = 1'000'000;

namespace detail {

// Escape time of u <= 1/2 under the quenched LSV forward maps with symbols
// read (not consumed) from relative index `base`: returns k with T^k(u) > 1/2,
// i.e. branch index m = k + 1; nullopt if the cap is hit first.
inline std::optional<std::uint64_t> escape_steps(double u, SymbolStream& stream,
                                                 const ModelParams& mp,
                                                 std::uint64_t cap,
                                                 std::size_t base = 0) {
  std::uint64_t k = 0;
  double v = u;
  while (v <= 0.5) {
    if (k >= cap) return std::nullopt;
    v = lsv_forward(
        mp.param_of(stream.at(base + static_cast<std::size_t>(k))), v);
    ++k;
  }
  return k;
}

// Backward diagonals for an excursion entering branch m at relative shift
// `base`: lower[i] = x_{m-i}(phi^{base+i} .), upper[i] = x_{m-1-i}(phi^{base+i} .).
inline void build_bracket(SymbolStream& stream, const ModelParams& mp,
                          std::uint64_t m, std::vector<double>& lower,
                          std::vector<double>& upper, std::size_t base = 0) {
  const auto mm = static_cast<std::size_t>(m);
  lower.assign(mm, 0.0);
  upper.assign(mm, 0.0);
  lower[mm - 1] = 0.5;  // x_1 = 1/2
  for (std::size_t i = mm - 1; i-- > 0;)
    lower[i] = lsv_left_inverse(mp.param_of(stream.at(base + i)), lower[i + 1],
                                lower[i + 1]);
  upper[mm - 1] = 1.0;  // x_0 = 1 (left branch sends 1/2 to 1)
  if (mm >= 2) {
    upper[mm - 2] = 0.5;
    for (std::size_t i = mm - 2; i-- > 0;)
      upper[i] = lsv_left_inverse(mp.param_of(stream.at(base + i)),
                                  upper[i + 1], upper[i + 1]);
  }
}

}  // namespace detail

// One step of the linearized skew product. Returns false iff the branch
// search exhausted depth_cap (the state is then left unstepped with the cap
// hit recorded).
inline bool linearized_step(LinearizedState& s, const ModelParams& mp,
                            std::uint64_t depth_cap = kDefaultDepthCap) {
  if (!(s.x >= 0.0 && s.x <= 1.0))
    throw std::domain_error("linearized_step: x outside [0,1]");
  if (s.branch == 0) {
    const double y = 2.0 * s.x - 1.0;
    if (y > 0.5) {
      s.stream.shift();
      s.x = y;
      ++s.steps;
      return true;
    }
    // branch search reads post-shift symbols (relative index 1 before the
    // shift commits); the stream is only advanced once the search succeeds
    const auto esc = detail::escape_steps(y, s.stream, mp, depth_cap, 1);
    if (!esc) {
      ++s.cap_hits;
      return false;
    }
    std::uint64_t m = *esc + 1;
    detail::build_bracket(s.stream, mp, m, s.lower, s.upper, 1);
    // float-safe bracket: the escape count and the computed diagonals can
    // disagree by one ulp at the boundary
    if (y > s.upper[0] && m >= 2) {
      --m;
      detail::build_bracket(s.stream, mp, m, s.lower, s.upper, 1);
    } else if (y <= s.lower[0]) {
      ++m;
      detail::build_bracket(s.stream, mp, m, s.lower, s.upper, 1);
    }
    s.stream.shift();
    s.branch = m;
    s.pos = 0;
    s.rel = (y - s.lower[0]) / (s.upper[0] - s.lower[0]);
    if (!(s.rel > 0.0)) s.rel = 1e-300;
    if (s.rel > 1.0) s.rel = 1.0;
    s.x = y;
    ++s.steps;
    return true;
  }
  // mid-excursion: affine branch map preserves the relative coordinate
  s.stream.shift();
  ++s.pos;
  ++s.steps;
  if (s.pos == s.branch - 1) {
    s.x = 0.5 + 0.5 * s.rel;  // branch 1 = (1/2, 1]: returned
    s.branch = 0;
    s.pos = 0;
    s.lower.clear();
    s.upper.clear();
  } else {
    const std::size_t i = static_cast<std::size_t>(s.pos);
    s.x = s.lower[i] + s.rel * (s.upper[i] - s.lower[i]);
  }
  return true;
}

struct InducedStep {
  std::uint64_t R = 0;
  bool capped = false;
};

// First-return step of the linearized skew on Delta_0: from x in (1/2,1],
// equals R iterations of linearized_step. Implemented by the escape-time
// equivalence plus one backward pass; on cap exhaustion the state is left at
// the pre-step point and capped is set.
inline InducedStep induced_affine_step(LinearizedState& s, const ModelParams& mp,
                                       std::uint64_t depth_cap = kDefaultDepthCap) {
  if (!(s.in_delta0() && s.x > 0.5 && s.x <= 1.0))
    throw std::domain_error("induced_affine_step: state not in Delta_0");
  if (!linearized_step(s, mp, depth_cap)) return {0, true};
  if (s.branch == 0) return {1, false};  // y > 1/2: J_1 branch
  const std::uint64_t m = s.branch;
  // fast-forward the remaining m-1 affine steps: relative coordinate is
  // invariant, the stream advances by m-1
  s.stream.shift(static_cast<std::size_t>(m - 1));
  s.steps += m - 1;
  s.x = 0.5 + 0.5 * s.rel;
  s.branch = 0;
  s.pos = 0;
  s.lower.clear();
  s.upper.clear();
  return {m, false};
}

struct NuDelta0Options {
  std::uint64_t depth_cap = kDefaultDepthCap;
  // chains > 0: amortized sampling from `chains` independent chains with
  // `thin` induced steps between emissions (fresh symbol lanes per step make
  // this distributionally exact; see sample_nu_delta0 notes).
  std::size_t chains = 0;
  std::size_t thin = 3;
};

struct NuDelta0Result {
  std::vector<LinearizedState> states;
  std::uint64_t deep_excursions = 0;  // branch searches beyond depth_cap
};

// Approximate nu_{Delta_0} samples via burn-in of the induced chain. The
// induced invariant measure factorizes as (x-marginal) x Bernoulli(future
// symbols), so each induced step may run on a fresh symbol stream; the
// emitted states carry fresh streams as well. Excursions deeper than
// depth_cap occur with probability ~ x_{cap}(omega) per step; their relative
// entry coordinate is uniform on (0,1] up to O(x_cap) (the entry ordinate is
// locally uniform near 0), so the step draws rel ~ U(0,1] and the event is
// counted in deep_excursions.
inline NuDelta0Result sample_nu_delta0(const ModelParams& mp, std::size_t burn,
                                       std::size_t M, std::uint64_t seed,
                                       unsigned workers = 1,
                                       NuDelta0Options opts = {}) {
  if (burn < 1000)
    throw std::invalid_argument("sample_nu_delta0: need burn >= 1000");
  if (M == 0) throw std::invalid_argument("sample_nu_delta0: M == 0");

  std::atomic<std::uint64_t> deep{0};
  // one induced step of the u-chain (x = (1+u)/2, y = 2x-1 = u)
  auto induced_u = [&](double u, Xoshiro256pp& lane_rng,
                       std::uint64_t lane_seed) -> double {
    if (u > 0.5) return 2.0 * u - 1.0;  // J_1: immediate return
    SymbolStream stream(mp, lane_seed);
    const auto esc = detail::escape_steps(u, stream, mp, opts.depth_cap);
    if (!esc) {
      deep.fetch_add(1, std::memory_order_relaxed);
      return lane_rng.uniform_open0();
    }
    const std::uint64_t m = *esc + 1;
    std::vector<double> lower, upper;
    detail::build_bracket(stream, mp, m, lower, upper);
    double rel = (u - lower[0]) / (upper[0] - lower[0]);
    if (!(rel > 0.0)) rel = 1e-300;
    if (rel > 1.0) rel = 1.0;
    return rel;
  };

  NuDelta0Result out;
  out.states.reserve(M);
  if (opts.chains == 0) {
    // independent replicas, spec-shaped: uniform start, `burn` induced steps
    std::vector<double> us(M);
    parallel_for(M, workers, [&](std::size_t i) {
      Xoshiro256pp rng(derive_seed(seed, i, 0));
      double u = rng.uniform_open0();
      for (std::size_t b = 0; b < burn; ++b)
        u = induced_u(u, rng, derive_seed(seed, i, b + 1));
      us[i] = u;
    });
    for (std::size_t i = 0; i < M; ++i)
      out.states.emplace_back(0.5 + 0.5 * us[i],
                              SymbolStream(mp, derive_seed(seed ^ 0xabcdULL, i)));
  } else {
    const std::size_t C = opts.chains;
    const std::size_t per = (M + C - 1) / C;
    std::vector<std::vector<double>> emitted(C);
    parallel_for(C, workers, [&](std::size_t c) {
      Xoshiro256pp rng(derive_seed(seed, c, 0));
      std::uint64_t t = 0;
      double u = rng.uniform_open0();
      for (std::size_t b = 0; b < burn; ++b)
        u = induced_u(u, rng, derive_seed(seed, c, ++t));
      for (std::size_t k = 0; k < per; ++k) {
        for (std::size_t g = 0; g < opts.thin; ++g)
          u = induced_u(u, rng, derive_seed(seed, c, ++t));
        emitted[c].push_back(u);
      }
    });
    std::size_t i = 0;
    for (std::size_t k = 0; k < per && i < M; ++k)
      for (std::size_t c = 0; c < C && i < M; ++c, ++i)
        out.states.emplace_back(
            0.5 + 0.5 * emitted[c][k],
            SymbolStream(mp, derive_seed(seed ^ 0xabcdULL, i)));
  }
  out.deep_excursions = deep.load();
  return out;
}

struct InfiniteCorrelationPoint {
  std::uint64_t n = 0;
  double estimate = 0.0;
  double stderr_ = 0.0;
  double normalizer = 0.0;  // n^{1-1/alpha}, or 1/ln n at alpha = 1
};

struct InfiniteCorrelationReport {
  std::vector<InfiniteCorrelationPoint> points;
  double fitted_slope = 0.0;  // log-log slope of the estimates (alpha > 1)
  double slope_stderr = 0.0;
  std::uint64_t deep_excursions = 0;
};

// E_{nu_{Delta_0}}[ f(z) g(S^n z) ] for observables supported on Delta_0
// (functions of x on (1/2, 1]). Between returns g vanishes, so only the
// return skeleton is simulated; estimates at each grid n average over the
// return times inside the window [0.9 n, 1.1 n] (the estimand varies by
// O(10%) there while the return clustering multiplies the effective sample
// count), which leaves the fitted log-log slope unchanged.
template <typename F, typename G>
InfiniteCorrelationReport infinite_correlation(
    F&& f, G&& g, const ModelParams& mp, std::span<const std::uint64_t> n_grid,
    std::size_t M, std::uint64_t seed, unsigned workers = 1,
    std::size_t burn = 1000, NuDelta0Options opts = {}) {
  if (n_grid.empty() || M < 2)
    throw std::invalid_argument("infinite_correlation: need grid and M >= 2");
  std::vector<std::uint64_t> grid(n_grid.begin(), n_grid.end());
  std::sort(grid.begin(), grid.end());
  const bool has_zero = grid.front() == 0;
  std::vector<std::uint64_t> wlo(grid.size()), whi(grid.size());
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    wlo[gi] = std::max<std::uint64_t>(
        1, static_cast<std::uint64_t>(0.9 * static_cast<double>(grid[gi])));
    whi[gi] = std::max<std::uint64_t>(
        grid[gi], static_cast<std::uint64_t>(1.1 * static_cast<double>(grid[gi])));
  }

  auto start = sample_nu_delta0(mp, burn, M, derive_seed(seed, 0xeeee), workers, opts);

  std::vector<std::vector<double>> acc(grid.size(), std::vector<double>(M, 0.0));
  parallel_for(M, workers, [&](std::size_t i) {
    LinearizedState z = std::move(start.states[i]);
    const double f0 = f(z.x);
    if (has_zero) acc[0][i] = f0 * g(z.x);
    if (f0 == 0.0) return;
    std::uint64_t t = 0;
    while (t < whi.back()) {
      // next return; excursions longer than the remaining window contribute 0
      const std::uint64_t remaining = whi.back() - t;
      const auto step = induced_affine_step(z, mp, remaining + 2);
      if (step.capped) break;
      t += step.R;
      if (t > whi.back()) break;
      const double gv = g(z.x);
      if (gv != 0.0) {
        for (std::size_t gi = has_zero ? 1 : 0; gi < grid.size(); ++gi)
          if (t >= wlo[gi] && t <= whi[gi]) acc[gi][i] += f0 * gv;
      }
    }
  });

  InfiniteCorrelationReport rep;
  rep.deep_excursions = start.deep_excursions;
  std::vector<double> xs, ys, ws;
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    const bool zero_pt = has_zero && gi == 0;
    const double wlen =
        zero_pt ? 1.0 : static_cast<double>(whi[gi] - wlo[gi] + 1);
    std::vector<double> vals(M);
    for (std::size_t i = 0; i < M; ++i) vals[i] = acc[gi][i] / wlen;
    const auto ms = mean_stderr(vals);
    InfiniteCorrelationPoint pt;
    pt.n = grid[gi];
    pt.estimate = ms.mean;
    pt.stderr_ = ms.stderr_;
    pt.normalizer =
        zero_pt ? 1.0
        : mp.alpha == 1.0
            ? 1.0 / std::log(static_cast<double>(grid[gi]))
            : std::pow(static_cast<double>(grid[gi]), 1.0 - 1.0 / mp.alpha);
    rep.points.push_back(pt);
    if (!zero_pt && ms.mean > 0.0) {
      const double rel = std::max(1e-12, ms.stderr_ / ms.mean);
      xs.push_back(std::log(static_cast<double>(grid[gi])));
      ys.push_back(std::log(ms.mean));
      ws.push_back(1.0 / (rel * rel));  // WLS: 1/variance in log space
    }
  }
  if (xs.size() >= 2) {
    const auto fit = fit_line(xs, ys, ws);
    rep.fitted_slope = fit.slope;
  }
  return rep;
}

struct ReturnGrowthPoint {
  std::uint64_t cap = 0;
  double mean_min_r = 0.0;
  double stderr_ = 0.0;
};

struct ReturnGrowthReport {
  std::vector<ReturnGrowthPoint> points;
  double loglog_slope = 0.0;   // slope of log E[min(R,cap)] vs log cap
  double ln_fit_r2 = 0.0;      // R^2 of E[min(R,cap)] vs ln cap
};

// E[min(R, cap)] under uniform starts on Delta_0 for a grid of caps; all
// caps share the same replicas (min(R, cap_max) is sampled once). For
// alpha > 1 the growth is cap^{1-1/alpha}; at alpha = 1 it is ~ ln cap; for
// alpha < 1 it converges (finite mean) - the infinite-measure signature.
inline ReturnGrowthReport truncated_return_growth(
    const ModelParams& mp, std::span<const std::uint64_t> caps, std::size_t M,
    std::uint64_t seed, unsigned workers = 1) {
  if (caps.empty() || M < 2)
    throw std::invalid_argument("truncated_return_growth: need caps and M >= 2");
  std::vector<std::uint64_t> cs(caps.begin(), caps.end());
  std::sort(cs.begin(), cs.end());
  const std::uint64_t cap_max = cs.back();

  std::vector<std::uint64_t> rmin(M);
  parallel_for(M, workers, [&](std::size_t i) {
    Xoshiro256pp rng(derive_seed(seed, i, 0));
    Xoshiro256pp sym(derive_seed(seed, i, 1));
    double x = 0.5 + 0.5 * rng.uniform_open0();
    std::uint64_t steps = 0;
    do {
      x = lsv_forward(sym.bernoulli(mp.p1) ? mp.fast : mp.slow, x);
      ++steps;
    } while (x <= 0.5 && steps < cap_max);
    rmin[i] = steps;  // = min(R, cap_max): the linearized model shares the
                      // J_n geometry with the LSV model, so R is the escape
                      // time of 2x-1 plus one
  });

  ReturnGrowthReport rep;
  std::vector<double> lx, ly, lnx, vy;
  for (std::uint64_t cap : cs) {
    std::vector<double> vals(M);
    for (std::size_t i = 0; i < M; ++i)
      vals[i] = static_cast<double>(std::min(rmin[i], cap));
    const auto ms = mean_stderr(vals);
    rep.points.push_back({cap, ms.mean, ms.stderr_});
    lx.push_back(std::log(static_cast<double>(cap)));
    ly.push_back(std::log(ms.mean));
    lnx.push_back(std::log(static_cast<double>(cap)));
    vy.push_back(ms.mean);
  }
  rep.loglog_slope = fit_line(lx, ly).slope;
  rep.ln_fit_r2 = fit_line(lnx, vy).r2;
  return rep;
}

}  // namespace irand
