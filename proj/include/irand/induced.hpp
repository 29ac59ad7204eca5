#pragma once

// First-return structure of the skew product on Delta_0 = (1/2,1] x [0,1].
// Return times are computed two independent ways: by iterating the skew
// step until x re-enters (1/2,1], and by bracketing x between the primed
// points x'_n(omega) (J_n = (x'_n, x'_{n-1}] carries return time n). The two
// implementations must agree exactly on generic inputs.
//
// Interval convention throughout: half-open (a, b], boundary hits assigned
// deterministically to the right-closed side, so x = 3/4 has R = 2.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "irand/parallel.hpp"
#include "irand/quenched.hpp"
#include "irand/skew.hpp"
#include "irand/stats.hpp"
#include "irand/symbols.hpp"

namespace irand {

struct ReturnRecord {
  std::uint64_t R = 0;
  double entry_x = 0.0;  // x at the moment of return, in (1/2, 1]
  SymbolString cylinder;  // the R symbols consumed
  double weight = 1.0;    // cylinder weight p1^{#Fast} p2^{#Slow}
};

// Iterate the skew step until x > 1/2 again; nullopt when `cap` steps pass
// without a return (cap exhaustion is a value, not an error).
inline std::optional<ReturnRecord> return_time_iterate(SkewState& s,
                                                       const ModelParams& mp,
                                                       std::uint64_t cap) {
  if (!(s.x > 0.5 && s.x <= 1.0))
    throw std::domain_error("return_time_iterate: state not in Delta_0");
  ReturnRecord rec;
  for (std::uint64_t k = 0; k < cap; ++k) {
    const Symbol sym = s.stream.at(0);
    rec.cylinder.push_back(sym);
    rec.weight *= mp.prob_of(sym);
    skew_step(s, mp);
    if (s.x > 0.5) {
      rec.R = k + 1;
      rec.entry_x = s.x;
      return rec;
    }
  }
  return std::nullopt;
}

// Return time by breakpoint search: the unique n with x'_n(w) < x <= x'_{n-1}(w),
// extending the primed sequence until it brackets. Reads symbols but does not
// consume them.
inline std::uint64_t return_time_locate(double x, SymbolStream& stream,
                                        const ModelParams& mp) {
  if (!(x > 0.5 && x <= 1.0))
    throw std::domain_error("return_time_locate: x not in (1/2, 1]");
  for (std::uint64_t n = 1;; ++n) {
    const double xp = quenched_xprime(stream, static_cast<std::size_t>(n), mp);
    if (xp < x) return n;
  }
}

struct TailPoint {
  std::uint64_t n = 0;
  double empirical = 0.0;
  double stderr_ = 0.0;
  double predicted = 0.0;  // asymptote (alpha p1)^{-1/alpha} n^{-1/alpha} / 2
};

struct TailReport {
  std::vector<TailPoint> points;
  std::uint64_t beyond_max = 0;  // replicas with R > max(n_grid), surfaced
  std::size_t replicas = 0;
};

// Empirical survival P(R > n) under uniform sampling of Delta_0 (x uniform
// on (1/2,1], symbols i.i.d.). Normalized on Delta_0 this should match
// E_omega(x_n): m x m{R>n} = E(x_n)/2 while m x m(Delta_0) = 1/2.
// Integer tallies use atomics; integer addition commutes, so results do not
// depend on the thread schedule.
inline TailReport tail_estimate(const ModelParams& mp,
                                std::span<const std::uint64_t> n_grid,
                                std::size_t M, std::uint64_t seed,
                                unsigned workers = 1) {
  if (n_grid.empty() || M == 0)
    throw std::invalid_argument("tail_estimate: empty grid or M == 0");
  std::uint64_t n_max = 0;
  for (auto n : n_grid) n_max = std::max(n_max, n);

  std::vector<std::atomic<std::uint64_t>> survive(n_grid.size());
  std::atomic<std::uint64_t> beyond{0};
  parallel_for(M, workers, [&](std::size_t i) {
    Xoshiro256pp rng(derive_seed(seed, i, 0));
    // Lazy scalar walk: symbols drawn on the fly, nothing buffered.
    Xoshiro256pp sym_rng(derive_seed(seed, i, 1));
    double x = 0.5 + 0.5 * rng.uniform_open0();
    std::uint64_t steps = 0;
    do {
      const MapParams& p =
          sym_rng.bernoulli(mp.p1) ? mp.fast : mp.slow;
      x = lsv_forward(p, x);
      ++steps;
    } while (x <= 0.5 && steps <= n_max);
    const std::uint64_t r = (x > 0.5) ? steps : n_max + 1;
    if (x <= 0.5) beyond.fetch_add(1, std::memory_order_relaxed);
    for (std::size_t g = 0; g < n_grid.size(); ++g)
      if (r > n_grid[g]) survive[g].fetch_add(1, std::memory_order_relaxed);
  });

  TailReport rep;
  rep.replicas = M;
  rep.beyond_max = beyond.load();
  const double inv_alpha = 1.0 / mp.alpha;
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    TailPoint pt;
    pt.n = n_grid[g];
    pt.empirical =
        static_cast<double>(survive[g].load()) / static_cast<double>(M);
    pt.stderr_ = std::sqrt(pt.empirical * (1.0 - pt.empirical) /
                           static_cast<double>(M));
    pt.predicted = 0.5 * std::pow(mp.alpha * mp.p1, -inv_alpha) *
                   std::pow(static_cast<double>(pt.n), -inv_alpha);
    rep.points.push_back(pt);
  }
  return rep;
}

}  // namespace irand
