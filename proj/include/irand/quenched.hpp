#pragma once

// Quenched backward orbits and the statistics around Theorem-style
// asymptotics n^{1/alpha} x_n(omega) -> (alpha p1)^{-1/alpha} / 2.
//
//   x_1(omega) = 1/2,  x_n(omega) = T^{-1}_{alpha(omega)}|[0,1/2] x_{n-1}(phi omega),
//
// so a single evaluation of x_n consumes the itinerary back to front
// (symbol indices n-2, n-3, ..., 0) in O(n). The primed points live in
// (1/2, 1]: x'_0 = 1, x'_1 = 3/4, x'_n = (x_n(phi omega) + 1)/2.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "irand/parallel.hpp"
#include "irand/rng.hpp"
#include "irand/stats.hpp"
#include "irand/symbols.hpp"

namespace irand {

// Limit constant of n^{1/alpha} x_n(omega): c(alpha) p1^{-1/alpha}.
inline double quenched_limit(const ModelParams& mp) {
  return 0.5 * std::pow(mp.alpha * mp.p1, -1.0 / mp.alpha);
}

// x_n(omega) for the itinerary in `sym` (needs sym.size() >= n-1).
inline double quenched_xn(std::span<const Symbol> sym, std::size_t n,
                          const ModelParams& mp) {
  if (n == 0) throw std::invalid_argument("quenched_xn: n must be >= 1");
  if (sym.size() + 1 < n)
    throw std::invalid_argument("quenched_xn: itinerary shorter than n-1 symbols");
  double v = 0.5;
  for (std::size_t j = n - 1; j-- > 0;)
    v = lsv_left_inverse(mp.param_of(sym[j]), v, v);
  return v;
}

inline double quenched_xn(SymbolStream& stream, std::size_t n,
                          const ModelParams& mp) {
  if (n == 0) throw std::invalid_argument("quenched_xn: n must be >= 1");
  return quenched_xn(stream.view(n > 0 ? n - 1 : 0), n, mp);
}

// x'_n(omega); reads the itinerary of phi omega, i.e. symbols 1..n-1.
inline double quenched_xprime(std::span<const Symbol> sym, std::size_t n,
                              const ModelParams& mp) {
  if (n == 0) return 1.0;
  if (n == 1) return 0.75;
  if (sym.size() < n)
    throw std::invalid_argument("quenched_xprime: itinerary shorter than n symbols");
  return 0.5 * (quenched_xn(sym.subspan(1), n, mp) + 1.0);
}

inline double quenched_xprime(SymbolStream& stream, std::size_t n,
                              const ModelParams& mp) {
  if (n <= 1) return n == 0 ? 1.0 : 0.75;
  return quenched_xprime(stream.view(n), n, mp);
}

// E_omega(x_n) by exact enumeration. The symbols are i.i.d., so the reversed
// consumption order has the same law and the expectation unrolls level by
// level: each value v at weight w branches into the two one-step inverses at
// weights w*p1, w*p2. Cost O(2^n) inverse solves, capped at n <= 20.
inline double expected_xn_exact(const ModelParams& mp, std::size_t n) {
  if (n == 0) throw std::invalid_argument("expected_xn_exact: n must be >= 1");
  if (n > 20)
    throw std::length_error("expected_xn_exact: n > 20 (2^19 cylinder cap)");
  std::vector<double> vals{0.5}, wts{1.0};
  for (std::size_t level = 1; level < n; ++level) {
    std::vector<double> nv(vals.size() * 2), nw(vals.size() * 2);
    for (std::size_t i = 0; i < vals.size(); ++i) {
      nv[2 * i] = lsv_left_inverse(mp.fast, vals[i], vals[i]);
      nw[2 * i] = wts[i] * mp.p1;
      nv[2 * i + 1] = lsv_left_inverse(mp.slow, vals[i], vals[i]);
      nw[2 * i + 1] = wts[i] * mp.p2();
    }
    vals.swap(nv);
    wts.swap(nw);
  }
  double e = 0.0;
  for (std::size_t i = 0; i < vals.size(); ++i) e += vals[i] * wts[i];
  return e;
}

// Monte Carlo estimate of E_omega(x_n) over M independent itineraries.
inline MeanStderr expected_xn_mc(const ModelParams& mp, std::size_t n,
                                 std::size_t M, std::uint64_t seed,
                                 unsigned workers = 1) {
  if (M < 2) throw std::invalid_argument("expected_xn_mc: need M >= 2");
  std::vector<double> xs(M);
  parallel_for(M, workers, [&](std::size_t i) {
    SymbolStream stream(mp, derive_seed(seed, i));
    xs[i] = quenched_xn(stream, n, mp);
  });
  return mean_stderr(xs);
}

enum class AnVariant { A, Aprime };

// The averaged sums A_n(omega) and A'_n(omega) driving the large-deviation
// argument; both converge to p1. The deterministic factors 2 x_k(alpha) =
// 2 c_k(alpha) k^{-1/alpha} come from the precomputed backward orbits, not
// from the asymptotic limit.
inline double an_statistic(std::span<const Symbol> sym, std::size_t n,
                           const ModelParams& mp, AnVariant variant,
                           std::span<const double> xseq_a = {},
                           std::span<const double> xseq_b = {}) {
  if (n < 2) throw std::invalid_argument("an_statistic: n must be >= 2");
  if (sym.size() + 1 < n)
    throw std::invalid_argument("an_statistic: itinerary shorter than n-1 symbols");
  std::vector<double> xa_own, xb_own;
  if (variant == AnVariant::A) {
    if (xseq_a.size() < n) {
      xa_own = deterministic_xseq(mp.fast, n);
      xseq_a = xa_own;
    }
    if (xseq_b.size() < n) {
      xb_own = deterministic_xseq(mp.slow, n);
      xseq_b = xb_own;
    }
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t k = 2; k <= n; ++k) {
      const bool slow = sym[n - k] == Symbol::Slow;
      // exponent alpha(phi^{n-k} omega) - alpha: 0 for Fast, beta-alpha for Slow
      const double base_a = 2.0 * xseq_a[k - 1];
      s1 += slow ? std::pow(base_a, mp.beta - mp.alpha) : 1.0;
      // exponent 2 alpha(.) - alpha: alpha for Fast, 2 beta - alpha for Slow
      const double base_b = 2.0 * xseq_b[k - 1];
      s2 += slow ? std::pow(base_b, 2.0 * mp.beta - mp.alpha)
                 : std::pow(base_b, mp.alpha);
    }
    const double inv = 1.0 / static_cast<double>(n - 1);
    return inv * s1 - 0.5 * (1.0 + mp.alpha) * inv * s2;
  }
  // A'_n: constant base 2 (c(alpha) p1^{-1/alpha} + 1) n^{-1/alpha} over the
  // range k = floor(sqrt n)+1 .. n.
  const auto root = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
  if (root + 1 > n) throw std::invalid_argument("an_statistic: n too small for Aprime");
  const double base =
      2.0 * (quenched_limit(mp) + 1.0) * std::pow(static_cast<double>(n), -1.0 / mp.alpha);
  double s = 0.0;
  for (std::size_t k = root + 1; k <= n; ++k) {
    const bool slow = sym[n - k] == Symbol::Slow;
    s += slow ? std::pow(base, mp.beta - mp.alpha) : 1.0;
  }
  return s / static_cast<double>(n - root);
}

// Empirical check of the Hoeffding bound P(|Xbar - E Xbar| >= t) <= exp(-2 n t^2)
// on the bounded summands of the limsup lemma: X_k = [2 x_k(alpha)]^{a(sym)-a}
// with values in [0,1]; n summands are used so the bound is exp(-2 n t^2).
struct HoeffdingPoint {
  double t = 0.0;
  double bound = 0.0;
  double empirical = 0.0;
  double stderr_ = 0.0;
  bool violated = false;  // empirical > bound + 3 stderr
};

struct HoeffdingReport {
  std::size_t n = 0;
  std::size_t replicas = 0;
  std::vector<HoeffdingPoint> points;
  bool any_violation = false;
};

inline HoeffdingReport hoeffding_check(const ModelParams& mp, std::size_t n,
                                       std::span<const double> t_grid,
                                       std::size_t M, std::uint64_t seed,
                                       unsigned workers = 1) {
  if (n == 0 || M == 0)
    throw std::invalid_argument("hoeffding_check: need n >= 1 and M >= 1");
  const auto xa = deterministic_xseq(MapParams(mp.alpha), n + 2);
  std::vector<double> slow_term(n);  // [2 x_k(alpha)]^{beta-alpha}, k = 2..n+1
  double esum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    slow_term[j] = std::pow(2.0 * xa[j + 1], mp.beta - mp.alpha);
    esum += mp.p1 + mp.p2() * slow_term[j];
  }
  const double expected = esum / static_cast<double>(n);

  std::vector<double> dev(M);
  parallel_for(M, workers, [&](std::size_t i) {
    Xoshiro256pp rng(derive_seed(seed, i));
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      s += rng.bernoulli(mp.p1) ? 1.0 : slow_term[j];
    dev[i] = std::fabs(s / static_cast<double>(n) - expected);
  });

  HoeffdingReport rep;
  rep.n = n;
  rep.replicas = M;
  for (double t : t_grid) {
    HoeffdingPoint pt;
    pt.t = t;
    pt.bound = std::exp(-2.0 * static_cast<double>(n) * t * t);
    std::size_t count = 0;
    for (double d : dev)
      if (d >= t) ++count;
    pt.empirical = static_cast<double>(count) / static_cast<double>(M);
    pt.stderr_ = std::sqrt(pt.empirical * (1.0 - pt.empirical) /
                           static_cast<double>(M));
    pt.violated = pt.empirical > pt.bound + 3.0 * pt.stderr_;
    rep.any_violation = rep.any_violation || pt.violated;
    rep.points.push_back(pt);
  }
  return rep;
}

// Per-n quenched report used by the asymptotics experiment: c_n samples,
// their mean/median, and the L1 error E|c_n - limit|.
struct QuenchedPoint {
  std::uint64_t n = 0;
  double mean_cn = 0.0;
  double stderr_ = 0.0;
  double median_cn = 0.0;
  double l1_error = 0.0;
};

struct QuenchedReport {
  std::vector<QuenchedPoint> points;
  double limit_value = 0.0;
};

// One backward pass per (replica, n); replicas share itineraries across the
// n-grid (common random numbers tighten the per-n comparisons).
inline QuenchedReport quenched_cn_report(const ModelParams& mp,
                                         std::span<const std::uint64_t> n_grid,
                                         std::size_t M, std::uint64_t seed,
                                         unsigned workers = 1) {
  QuenchedReport rep;
  rep.limit_value = quenched_limit(mp);
  std::vector<std::vector<double>> cn(n_grid.size(), std::vector<double>(M));
  parallel_for(M, workers, [&](std::size_t i) {
    SymbolStream stream(mp, derive_seed(seed, i));
    for (std::size_t g = 0; g < n_grid.size(); ++g) {
      const auto n = static_cast<std::size_t>(n_grid[g]);
      const double x = quenched_xn(stream, n, mp);
      cn[g][i] = std::pow(static_cast<double>(n), 1.0 / mp.alpha) * x;
    }
  });
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    QuenchedPoint pt;
    pt.n = n_grid[g];
    const auto ms = mean_stderr(cn[g]);
    pt.mean_cn = ms.mean;
    pt.stderr_ = ms.stderr_;
    pt.median_cn = median(cn[g]);
    double l1 = 0.0;
    for (double c : cn[g]) l1 += std::fabs(c - rep.limit_value);
    pt.l1_error = l1 / static_cast<double>(M);
    rep.points.push_back(pt);
  }
  return rep;
}

}  // namespace irand
