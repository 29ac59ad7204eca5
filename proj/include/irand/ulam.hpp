#pragma once

// Ulam discretization of the annealed transfer operator
// P_T = p1 P_{T_alpha} + p2 P_{T_beta} on a grid refined geometrically near
// the neutral fixed point. Entries are exact interval masses obtained from
// the monotone branch inverses; no quadrature. The fixed density comes from
// power iteration of the row-stochastic matrix.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "irand/lsv_map.hpp"
#include "irand/parallel.hpp"
#include "irand/stats.hpp"
#include "irand/symbols.hpp"

namespace irand {

struct UlamGrid {
  // strictly increasing breakpoints 0 = b[0] < ... < b[K] = 1
  std::vector<double> b;

  std::size_t cells() const { return b.size() - 1; }
  double left(std::size_t j) const { return b[j]; }
  double right(std::size_t j) const { return b[j + 1]; }
  double width(std::size_t j) const { return b[j + 1] - b[j]; }
  double mid(std::size_t j) const { return 0.5 * (b[j] + b[j + 1]); }

  // Cell index of x under the (a, b] convention; x = 0 belongs to cell 0.
  std::size_t locate(double x) const {
    if (!(x >= 0.0 && x <= 1.0))
      throw std::domain_error("UlamGrid::locate: x outside [0,1]");
    if (x <= b[1]) return 0;
    const auto it = std::lower_bound(b.begin(), b.end(), x);
    return static_cast<std::size_t>(it - b.begin()) - 1;
  }

  // K cells: half geometric on [x_min, 0.1] (plus the cell [0, x_min]),
  // half uniform on [0.1, 1]. The geometric ratio is derived from K and
  // x_min so that at least half the cells land in [0, 0.1].
  static UlamGrid geometric(std::size_t K, double x_min = 1e-8) {
    if (K < 8) throw std::invalid_argument("UlamGrid: need K >= 8");
    if (!(x_min > 0.0 && x_min < 0.05))
      throw std::invalid_argument("UlamGrid: need 0 < x_min < 0.05");
    const std::size_t geo = K / 2;      // cells in (0, 0.1]
    const std::size_t uni = K - geo;    // cells in (0.1, 1]
    UlamGrid g;
    g.b.reserve(K + 1);
    g.b.push_back(0.0);
    const double ratio = std::pow(0.1 / x_min, 1.0 / static_cast<double>(geo - 1));
    double v = x_min;
    for (std::size_t j = 0; j + 1 < geo; ++j) {
      g.b.push_back(v);
      v *= ratio;
    }
    g.b.push_back(0.1);
    for (std::size_t j = 1; j < uni; ++j)
      g.b.push_back(0.1 + 0.9 * static_cast<double>(j) / static_cast<double>(uni));
    g.b.push_back(1.0);
    for (std::size_t j = 1; j < g.b.size(); ++j)
      if (!(g.b[j] > g.b[j - 1]))
        throw std::runtime_error("UlamGrid: breakpoints not strictly increasing");
    return g;
  }
};

// Compressed sparse rows; row i holds the image mass distribution of cell i.
struct SparseRowMatrix {
  std::size_t size = 0;
  std::vector<std::size_t> row_begin;  // size+1
  std::vector<std::size_t> col;
  std::vector<double> val;

  double row_sum(std::size_t i) const {
    double s = 0.0;
    for (std::size_t k = row_begin[i]; k < row_begin[i + 1]; ++k) s += val[k];
    return s;
  }
};

namespace detail {

using Entry = std::pair<std::size_t, double>;

// Append the mass distribution of [lo, hi] (inside one monotone increasing
// branch) over the grid cells its image covers; `inv` maps an image ordinate
// back into [lo, hi]. Masses are exact subinterval lengths over (hi - lo).
template <typename Inv>
void scatter_branch(const UlamGrid& grid, double lo, double hi, double img_lo,
                    double img_hi, double prob, Inv&& inv,
                    std::vector<Entry>& out) {
  if (!(hi > lo) || prob <= 0.0) return;
  const double inv_len = 1.0 / (hi - lo);
  std::size_t j = grid.locate(img_lo == 0.0 ? 0.0 : std::nextafter(img_lo, 2.0));
  double x_prev = lo;
  while (true) {
    const double cell_hi = grid.right(j);
    const bool last = img_hi <= cell_hi || j + 1 == grid.cells();
    double x_next = hi;
    if (!last) x_next = std::clamp(inv(cell_hi), lo, hi);
    const double mass = (x_next - x_prev) * inv_len * prob;
    if (mass > 0.0) out.emplace_back(j, mass);
    if (last) break;
    x_prev = x_next;
    ++j;
  }
}

}  // namespace detail

// Row i, column j: p1 m(cell_i ∩ T_alpha^{-1} cell_j)/m(cell_i) + the same
// for T_beta. Rows are normalized at the end, so row sums are exactly 1 up
// to one final rounding.
inline SparseRowMatrix ulam_matrix(const UlamGrid& grid, const ModelParams& mp,
                                   unsigned workers = 1) {
  const std::size_t K = grid.cells();
  std::vector<std::vector<std::size_t>> cols(K);
  std::vector<std::vector<double>> vals(K);

  parallel_for(K, workers, [&](std::size_t i) {
    std::vector<detail::Entry> acc;
    const double a = grid.left(i), b = grid.right(i);
    struct Piece {
      double lo, hi;
      bool left_branch;
    };
    Piece pieces[2];
    std::size_t n_pieces = 0;
    if (b <= 0.5) {
      pieces[n_pieces++] = {a, b, true};
    } else if (a >= 0.5) {
      pieces[n_pieces++] = {a, b, false};
    } else {
      pieces[n_pieces++] = {a, 0.5, true};
      pieces[n_pieces++] = {0.5, b, false};
    }
    for (std::size_t pi = 0; pi < n_pieces; ++pi) {
      const auto& pc = pieces[pi];
      const double frac = (pc.hi - pc.lo) / (b - a);
      if (pc.left_branch) {
        for (Symbol s : {Symbol::Fast, Symbol::Slow}) {
          const MapParams& p = mp.param_of(s);
          const double prob = mp.prob_of(s);
          if (prob == 0.0) continue;
          const double img_lo = lsv_forward(p, pc.lo);
          const double img_hi = lsv_forward(p, pc.hi);
          detail::scatter_branch(
              grid, pc.lo, pc.hi, img_lo, img_hi, prob * frac,
              [&](double y) { return lsv_left_inverse(p, y); }, acc);
        }
      } else {
        // right branch 2x-1 is shared by both maps: total probability 1
        const double img_lo = 2.0 * pc.lo - 1.0;
        const double img_hi = 2.0 * pc.hi - 1.0;
        detail::scatter_branch(
            grid, pc.lo, pc.hi, img_lo, img_hi, frac,
            [&](double y) { return 0.5 * (y + 1.0); }, acc);
      }
    }
    std::sort(acc.begin(), acc.end(),
              [](const detail::Entry& l, const detail::Entry& r) {
                return l.first < r.first;
              });
    double sum = 0.0;
    for (const auto& e : acc) sum += e.second;
    const double norm = sum > 0 ? 1.0 / sum : 0.0;
    for (const auto& e : acc) {
      if (!cols[i].empty() && cols[i].back() == e.first)
        vals[i].back() += e.second * norm;
      else {
        cols[i].push_back(e.first);
        vals[i].push_back(e.second * norm);
      }
    }
  });

  SparseRowMatrix m;
  m.size = K;
  m.row_begin.resize(K + 1, 0);
  for (std::size_t i = 0; i < K; ++i)
    m.row_begin[i + 1] = m.row_begin[i] + cols[i].size();
  m.col.resize(m.row_begin[K]);
  m.val.resize(m.row_begin[K]);
  for (std::size_t i = 0; i < K; ++i) {
    std::copy(cols[i].begin(), cols[i].end(), m.col.begin() + m.row_begin[i]);
    std::copy(vals[i].begin(), vals[i].end(), m.val.begin() + m.row_begin[i]);
  }
  return m;
}

// Transpose into pull form: out[j] = sum_i in[i] * M(i, j) becomes a gather
// over the fixed column list of j, so the update threads deterministically.
inline SparseRowMatrix transpose(const SparseRowMatrix& m) {
  SparseRowMatrix t;
  t.size = m.size;
  t.row_begin.assign(m.size + 1, 0);
  for (std::size_t c : m.col) ++t.row_begin[c + 1];
  for (std::size_t j = 0; j < m.size; ++j) t.row_begin[j + 1] += t.row_begin[j];
  t.col.resize(m.col.size());
  t.val.resize(m.val.size());
  std::vector<std::size_t> fill(t.row_begin.begin(), t.row_begin.end() - 1);
  for (std::size_t i = 0; i < m.size; ++i)
    for (std::size_t k = m.row_begin[i]; k < m.row_begin[i + 1]; ++k) {
      const std::size_t j = m.col[k];
      t.col[fill[j]] = i;
      t.val[fill[j]] = m.val[k];
      ++fill[j];
    }
  return t;
}

struct DensityEstimate {
  UlamGrid grid;
  std::vector<double> mass;  // per-cell masses, sum = 1

  double value(std::size_t j) const { return mass[j] / grid.width(j); }
  std::vector<double> cell_values() const {
    std::vector<double> v(mass.size());
    for (std::size_t j = 0; j < mass.size(); ++j) v[j] = value(j);
    return v;
  }
  double total() const { return std::accumulate(mass.begin(), mass.end(), 0.0); }

  // Density value at x (piecewise constant).
  double at(double x) const { return value(grid.locate(x)); }
};

enum class DensityInit { Uniform, PowerLaw };

struct DensityResult {
  DensityEstimate density;
  double residual_l1 = 0.0;  // ||m P - m||_1 at exit
  std::size_t iterations = 0;
  bool converged = false;
};

namespace detail {
inline double exit_residual(const SparseRowMatrix& pull,
                            const std::vector<double>& cur,
                            std::vector<double>& scratch, unsigned workers) {
  const std::size_t K = cur.size();
  parallel_for(K, workers, [&](std::size_t j) {
    double acc = 0.0;
    for (std::size_t k = pull.row_begin[j]; k < pull.row_begin[j + 1]; ++k)
      acc += pull.val[k] * cur[pull.col[k]];
    scratch[j] = acc;
  });
  double res = 0.0;
  for (std::size_t j = 0; j < K; ++j) res += std::fabs(scratch[j] - cur[j]);
  return res;
}
}  // namespace detail

// Power iteration m <- m P with per-step normalization until the successive
// L1 distance drops below tol. The PowerLaw start seeds the known x^{-alpha}
// blow-up so the slow tail modes begin near equilibrium.
inline DensityResult invariant_density(const SparseRowMatrix& matrix,
                                       const UlamGrid& grid, double tol = 1e-12,
                                       std::size_t max_iter = 200000,
                                       DensityInit init = DensityInit::PowerLaw,
                                       double init_alpha = 0.5,
                                       unsigned workers = 1) {
  const std::size_t K = grid.cells();
  if (matrix.size != K)
    throw std::invalid_argument("invariant_density: matrix/grid size mismatch");
  const SparseRowMatrix pull = transpose(matrix);

  std::vector<double> cur(K), nxt(K);
  if (init == DensityInit::Uniform) {
    for (std::size_t j = 0; j < K; ++j) cur[j] = grid.width(j);
  } else {
    const double e = 1.0 - init_alpha;  // mass of x^{-alpha} over a cell
    for (std::size_t j = 0; j < K; ++j)
      cur[j] = std::pow(grid.right(j), e) - std::pow(grid.left(j), e);
  }
  double s0 = std::accumulate(cur.begin(), cur.end(), 0.0);
  for (auto& v : cur) v /= s0;

  DensityResult out;
  out.density.grid = grid;
  double diff = 0.0;
  std::size_t it = 0;
  std::vector<double> block_diff(workers > 0 ? workers : 1);
  for (; it < max_iter; ++it) {
    parallel_for(K, workers, [&](std::size_t j) {
      double acc = 0.0;
      for (std::size_t k = pull.row_begin[j]; k < pull.row_begin[j + 1]; ++k)
        acc += pull.val[k] * cur[pull.col[k]];
      nxt[j] = acc;
    });
    double total = std::accumulate(nxt.begin(), nxt.end(), 0.0);
    diff = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
      nxt[j] /= total;
      diff += std::fabs(nxt[j] - cur[j]);
    }
    cur.swap(nxt);
    if (diff < tol) {
      ++it;
      break;
    }
  }
  out.iterations = it;
  out.converged = diff < tol;
  out.residual_l1 = detail::exit_residual(pull, cur, nxt, workers);
  out.density.mass = std::move(cur);
  return out;
}

// L1 distance between two piecewise-constant densities over the merged
// breakpoint set (grids need not be nested).
inline double density_l1_distance(const DensityEstimate& a,
                                  const DensityEstimate& b) {
  double dist = 0.0;
  std::size_t ia = 0, ib = 0;
  double x = 0.0;
  while (x < 1.0 && ia < a.grid.cells() && ib < b.grid.cells()) {
    const double nx = std::min(a.grid.right(ia), b.grid.right(ib));
    dist += std::fabs(a.value(ia) - b.value(ib)) * (nx - x);
    if (a.grid.right(ia) <= nx) ++ia;
    if (b.grid.right(ib) <= nx) ++ib;
    x = nx;
  }
  return dist;
}

struct ConeReport {
  bool nonnegative = true;
  bool decreasing = true;       // up to one-cell glitches
  bool integral_bound = true;   // int_0^x f <= a x^{1-beta} int_0^1 f
  double a_used = 0.0;
  std::size_t monotonicity_glitches = 0;  // isolated single-cell violations
  double worst_integral_ratio = 0.0;      // max over x of lhs/rhs
  bool pass() const { return nonnegative && decreasing && integral_bound; }
};

// Regularity of the computed density against the invariant cone
// C_a = { f >= 0, f decreasing, int_0^x f <= a x^{1-beta} int_0^1 f } with
// a* = 4/(1-beta). Monotonicity tolerates isolated one-cell wiggles at the
// discretization scale: a cell may exceed its predecessor by a relative
// 1e-6, or exceed one neighbor but not two in a row.
inline ConeReport cone_check(const DensityEstimate& d, double beta) {
  if (!(beta < 1.0)) throw std::invalid_argument("cone_check: need beta < 1");
  ConeReport rep;
  rep.a_used = 4.0 / (1.0 - beta);
  const std::size_t K = d.grid.cells();
  for (std::size_t j = 0; j < K; ++j)
    if (d.mass[j] < 0.0) rep.nonnegative = false;

  std::size_t consecutive = 0;
  for (std::size_t j = 1; j < K; ++j) {
    const double prev = d.value(j - 1), curv = d.value(j);
    if (curv > prev * (1.0 + 1e-6) + 1e-300) {
      ++rep.monotonicity_glitches;
      ++consecutive;
      if (consecutive >= 2) rep.decreasing = false;
    } else {
      consecutive = 0;
    }
  }

  const double total = d.total();
  double cum = 0.0;
  for (std::size_t j = 0; j < K; ++j) {
    cum += d.mass[j];
    const double x = d.grid.right(j);
    const double bound = rep.a_used * std::pow(x, 1.0 - beta) * total;
    rep.worst_integral_ratio = std::max(rep.worst_integral_ratio, cum / bound);
    if (cum > bound) rep.integral_bound = false;
  }
  return rep;
}

// Empirical log-log slope of the density near zero (the spec leaves the
// blow-up exponent open; we measure it instead of asserting it).
inline double density_slope_at_zero(const DensityEstimate& d, double x_lo = 1e-6,
                                    double x_hi = 1e-3) {
  std::vector<double> lx, ly;
  for (std::size_t j = 0; j < d.grid.cells(); ++j) {
    const double m = d.grid.mid(j);
    if (m < x_lo || m > x_hi || d.mass[j] <= 0.0) continue;
    lx.push_back(std::log(m));
    ly.push_back(std::log(d.value(j)));
  }
  if (lx.size() < 8) throw std::runtime_error("density_slope_at_zero: too few cells in window");
  return fit_line(lx, ly).slope;
}

}  // namespace irand
