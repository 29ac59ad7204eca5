#pragma once

// Stationary sampling from the invariant measure nu = f* x Bernoulli and
// correlation decay Cor(phi, psi)(n) = int phi o S^n . psi dnu - int phi int psi.
//
// Two estimation routes are provided:
//  - a stationary-start Monte Carlo (nu_sample + n skew steps), and
//  - a deterministic transfer-operator route that pushes the signed measure
//    psi f* through the Ulam matrix n times (x-only observables).
// They estimate the same quantity; the operator route has no sampling noise,
// which matters because the signal decays like n^{1-1/alpha} while per-sample
// Monte Carlo noise is O(1).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "irand/observables.hpp"
#include "irand/parallel.hpp"
#include "irand/skew.hpp"
#include "irand/stats.hpp"
#include "irand/symbols.hpp"
#include "irand/ulam.hpp"

namespace irand {

// Draw x from the piecewise-constant density by inverse CDF.
class DensitySampler {
 public:
  explicit DensitySampler(const DensityEstimate& d) : d_(&d) {
    cum_.resize(d.mass.size() + 1, 0.0);
    for (std::size_t j = 0; j < d.mass.size(); ++j)
      cum_[j + 1] = cum_[j] + d.mass[j];
    const double total = cum_.back();
    for (auto& c : cum_) c /= total;
  }

  double draw(Xoshiro256pp& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
    std::size_t j = static_cast<std::size_t>(it - cum_.begin());
    j = j > 0 ? j - 1 : 0;
    if (j >= d_->mass.size()) j = d_->mass.size() - 1;
    const double frac = (u - cum_[j]) / std::max(cum_[j + 1] - cum_[j], 1e-300);
    return d_->grid.left(j) + frac * d_->grid.width(j);
  }

 private:
  const DensityEstimate* d_;
  std::vector<double> cum_;
};

// M approximate nu-stationary states: x from the density, symbols i.i.d.
// (the invariant density of the skew factorizes as f*(x) x Bernoulli).
inline std::vector<SkewState> nu_sample(const DensityEstimate& d,
                                        const ModelParams& mp, std::size_t M,
                                        std::uint64_t seed) {
  DensitySampler sampler(d);
  std::vector<SkewState> out;
  out.reserve(M);
  for (std::size_t i = 0; i < M; ++i) {
    Xoshiro256pp rng(derive_seed(seed, i, 0));
    out.emplace_back(sampler.draw(rng), SymbolStream(mp, derive_seed(seed, i, 1)));
  }
  return out;
}

// nu-mean of an observable by density quadrature plus symbol averaging.
inline double nu_mean(const Observable& f, const DensityEstimate& d,
                      const ModelParams& mp) {
  const std::size_t K = d.grid.cells();
  if (f.symbol_horizon <= 0) {
    double m = 0.0;
    for (std::size_t j = 0; j < K; ++j) m += f.eval(d.grid.mid(j), {}) * d.mass[j];
    return m;
  }
  double m = 0.0;
  for (const auto& [sym, w] :
       cylinder_enumerate(mp, static_cast<std::size_t>(f.symbol_horizon))) {
    double mx = 0.0;
    for (std::size_t j = 0; j < K; ++j) mx += f.eval(d.grid.mid(j), sym) * d.mass[j];
    m += w * mx;
  }
  return m;
}

struct CorrelationPoint {
  std::uint64_t n = 0;
  double corr = 0.0;
  double stderr_ = 0.0;  // zero for the operator route
  double predicted = 0.0;
};

// Theorem-style prefactors built from the density at 1/2 (right-limit cell):
// A = c(alpha) p1^{-1/alpha} E(h(1/2, .)) / 2 and the sharp correlation
// constant A (1/alpha - 1)^{-1}.
struct CorrConstants {
  double f_half = 0.0;
  double A = 0.0;
  double sharp_constant = 0.0;
};

inline CorrConstants corr_constants(const ModelParams& mp,
                                    const DensityEstimate& d) {
  CorrConstants c;
  c.f_half = d.at(std::nextafter(0.5, 1.0));
  c.A = 0.5 * c_alpha(mp.alpha) * std::pow(mp.p1, -1.0 / mp.alpha) * c.f_half;
  c.sharp_constant = c.A / (1.0 / mp.alpha - 1.0);
  return c;
}

inline double predicted_correlation(const ModelParams& mp,
                                    const CorrConstants& cc, double mean_phi,
                                    double mean_psi, double n) {
  return cc.sharp_constant * std::pow(n, 1.0 - 1.0 / mp.alpha) * mean_phi *
         mean_psi;
}

// Monte Carlo route: stationary starts, n skew steps, indexed reduction.
// The replica estimates share trajectories across the n-grid.
inline std::vector<CorrelationPoint> correlation_estimate_mc(
    const Observable& phi, const Observable& psi,
    std::span<const std::uint64_t> n_grid, const ModelParams& mp,
    const DensityEstimate& d, std::size_t M, std::uint64_t seed,
    unsigned workers = 1) {
  if (n_grid.empty() || M < 2)
    throw std::invalid_argument("correlation_estimate_mc: need grid and M >= 2");
  std::vector<std::uint64_t> grid(n_grid.begin(), n_grid.end());
  std::sort(grid.begin(), grid.end());
  const std::uint64_t n_max = grid.back();
  const auto h_phi = static_cast<std::size_t>(std::max(phi.symbol_horizon, 0));
  const auto h_psi = static_cast<std::size_t>(std::max(psi.symbol_horizon, 0));

  DensitySampler sampler(d);
  std::vector<std::vector<double>> prod(grid.size(), std::vector<double>(M));
  parallel_for(M, workers, [&](std::size_t i) {
    Xoshiro256pp rng(derive_seed(seed, i, 0));
    SkewState s(sampler.draw(rng), SymbolStream(mp, derive_seed(seed, i, 1)));
    const double psi0 = psi.eval(s.x, s.stream.view(h_psi));
    std::size_t g = 0;
    for (std::uint64_t k = 0; k <= n_max && g < grid.size(); ++k) {
      if (k == grid[g]) {
        prod[g][i] = psi0 * phi.eval(s.x, s.stream.view(h_phi));
        ++g;
      }
      if (k < n_max) skew_step(s, mp);
    }
  });

  const double mean_phi = nu_mean(phi, d, mp);
  const double mean_psi = nu_mean(psi, d, mp);
  const auto cc = corr_constants(mp, d);
  std::vector<CorrelationPoint> out;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto ms = mean_stderr(prod[g]);
    CorrelationPoint pt;
    pt.n = grid[g];
    pt.corr = ms.mean - mean_phi * mean_psi;
    pt.stderr_ = ms.stderr_;
    pt.predicted = predicted_correlation(mp, cc, mean_phi, mean_psi,
                                         static_cast<double>(pt.n));
    out.push_back(pt);
  }
  return out;
}

// Operator route (x-only observables): evolve the signed measure psi f*
// through the Ulam matrix and read int phi d(evolved) at each grid n.
inline std::vector<CorrelationPoint> correlation_estimate_operator(
    const Observable& phi, const Observable& psi,
    std::span<const std::uint64_t> n_grid, const ModelParams& mp,
    const SparseRowMatrix& matrix, const DensityEstimate& d,
    unsigned workers = 1) {
  if (phi.symbol_horizon != 0 || psi.symbol_horizon != 0)
    throw std::invalid_argument(
        "correlation_estimate_operator: x-only observables required");
  if (matrix.size != d.grid.cells())
    throw std::invalid_argument("correlation_estimate_operator: size mismatch");
  std::vector<std::uint64_t> grid(n_grid.begin(), n_grid.end());
  std::sort(grid.begin(), grid.end());
  const std::size_t K = matrix.size;
  const SparseRowMatrix pull = transpose(matrix);

  std::vector<double> v(K), nv(K), phim(K);
  double mean_phi = 0.0, mean_psi = 0.0;
  for (std::size_t j = 0; j < K; ++j) {
    const double psij = psi.eval(d.grid.mid(j), {});
    phim[j] = phi.eval(d.grid.mid(j), {});
    v[j] = psij * d.mass[j];
    mean_phi += phim[j] * d.mass[j];
    mean_psi += psij * d.mass[j];
  }
  const auto cc = corr_constants(mp, d);
  std::vector<CorrelationPoint> out;
  auto emit = [&](std::uint64_t n) {
    double ip = 0.0;
    for (std::size_t j = 0; j < K; ++j) ip += phim[j] * v[j];
    CorrelationPoint pt;
    pt.n = n;
    pt.corr = ip - mean_phi * mean_psi;
    pt.predicted = predicted_correlation(mp, cc, mean_phi, mean_psi,
                                         static_cast<double>(n));
    out.push_back(pt);
  };
  std::size_t g = 0;
  if (g < grid.size() && grid[g] == 0) emit(grid[g++]);
  for (std::uint64_t n = 1; g < grid.size(); ++n) {
    parallel_for(K, workers, [&](std::size_t j) {
      double acc = 0.0;
      for (std::size_t k = pull.row_begin[j]; k < pull.row_begin[j + 1]; ++k)
        acc += pull.val[k] * v[pull.col[k]];
      nv[j] = acc;
    });
    v.swap(nv);
    if (n == grid[g]) emit(grid[g++]);
  }
  return out;
}

}  // namespace irand
