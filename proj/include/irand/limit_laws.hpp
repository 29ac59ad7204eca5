#pragma once

// Birkhoff sums S_n f over the skew product and the distributional
// trichotomy: CLT for alpha < 1/2, CLT for centered observables up to
// alpha < 1 under a Holder envelope, the sqrt(c^2 A n ln n) normalization at
// alpha = 1/2, and the (1/alpha)-stable law with explicit characteristic
// function for 1/2 < alpha < 1.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "irand/correlation.hpp"
#include "irand/observables.hpp"
#include "irand/parallel.hpp"
#include "irand/stats.hpp"

namespace irand {

enum class LimitCaseKind {
  CLT,                 // alpha < 1/2
  CLT_centered,        // alpha in [1/2, 1), c = 0, Holder envelope
  LogNormal_halfcase,  // alpha = 1/2, c != 0: sqrt(c^2 A n ln n)
  Stable,              // alpha in (1/2, 1), c != 0: n^alpha
};

inline const char* to_string(LimitCaseKind k) {
  switch (k) {
    case LimitCaseKind::CLT: return "CLT";
    case LimitCaseKind::CLT_centered: return "CLT_centered";
    case LimitCaseKind::LogNormal_halfcase: return "LogNormal_halfcase";
    case LimitCaseKind::Stable: return "Stable";
  }
  return "?";
}

struct LimitCase {
  LimitCaseKind kind;
  // B_n for the case; c and A enter only in the half case / stable case.
  double normalizer(double n, double c, double A, double alpha) const {
    switch (kind) {
      case LimitCaseKind::CLT:
      case LimitCaseKind::CLT_centered:
        return std::sqrt(n);
      case LimitCaseKind::LogNormal_halfcase:
        return std::sqrt(c * c * A * n * std::log(n));
      case LimitCaseKind::Stable:
        return std::pow(n, alpha);
    }
    return std::sqrt(n);
  }
};

// Case selection is a pure function of (alpha, c); the envelope hypothesis
// of the centered case is validated separately in run_limit_case.
inline LimitCase select_limit_case(const ModelParams& mp, double c_value) {
  if (!(mp.alpha < 1.0))
    throw std::invalid_argument("select_limit_case: limit laws need alpha < 1");
  const bool c_zero = std::fabs(c_value) <= 1e-12;
  if (mp.alpha < 0.5) return {LimitCaseKind::CLT};
  if (c_zero) return {LimitCaseKind::CLT_centered};
  if (mp.alpha == 0.5) return {LimitCaseKind::LogNormal_halfcase};
  return {LimitCaseKind::Stable};
}

struct SampleBatch {
  std::vector<double> values;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  std::string tag;
};

// Subtract the nu-mean (density quadrature plus symbol averaging); c_value
// shifts by the same constant.
inline Observable center_observable(const Observable& f,
                                    const DensityEstimate& d,
                                    const ModelParams& mp) {
  const double m = nu_mean(f, d, mp);
  Observable g;
  g.eval = [inner = f.eval, m](double x, std::span<const Symbol> sym) {
    return inner(x, sym) - m;
  };
  g.symbol_horizon = f.symbol_horizon;
  g.holder_exponent = f.holder_exponent;
  g.c_value = f.c_value - m;
  return g;
}

// S_n f at each checkpoint, one entry per replica, stationary starts.
inline std::vector<SampleBatch> birkhoff_checkpoints(
    const Observable& f, const ModelParams& mp, const DensityEstimate& d,
    std::span<const std::uint64_t> checkpoints, std::size_t M,
    std::uint64_t seed, unsigned workers = 1) {
  if (checkpoints.empty() || M == 0)
    throw std::invalid_argument("birkhoff_checkpoints: empty checkpoints or M");
  std::vector<std::uint64_t> cps(checkpoints.begin(), checkpoints.end());
  std::sort(cps.begin(), cps.end());
  const std::uint64_t n_max = cps.back();
  const auto h = static_cast<std::size_t>(std::max(f.symbol_horizon, 0));

  DensitySampler sampler(d);
  std::vector<std::vector<double>> sums(cps.size(), std::vector<double>(M));
  parallel_for(M, workers, [&](std::size_t i) {
    Xoshiro256pp rng(derive_seed(seed, i, 0));
    double x = sampler.draw(rng);
    SymbolStream stream(mp, derive_seed(seed, i, 1));
    double s = 0.0;
    std::size_t g = 0;
    for (std::uint64_t k = 0; k < n_max; ++k) {
      s += h == 0 ? f.eval(x, {}) : f.eval(x, stream.view(h));
      x = lsv_forward(mp.param_of(stream.at(0)), x);
      stream.shift();
      if (k + 1 == cps[g]) {
        sums[g][i] = s;
        ++g;
      }
    }
  });

  std::vector<SampleBatch> out;
  for (std::size_t g = 0; g < cps.size(); ++g) {
    SampleBatch b;
    b.values = std::move(sums[g]);
    b.n = cps[g];
    b.seed = seed;
    out.push_back(std::move(b));
  }
  return out;
}

inline SampleBatch birkhoff_samples(const Observable& f, const ModelParams& mp,
                                    const DensityEstimate& d, std::uint64_t n,
                                    std::size_t M, std::uint64_t seed,
                                    unsigned workers = 1) {
  const std::uint64_t cps[] = {n};
  return std::move(birkhoff_checkpoints(f, mp, d, cps, M, seed, workers)[0]);
}

// Characteristic function of the Theorem-form stable limit:
// exp{-A |c|^{1/a} Gamma(1-1/a) cos(pi/(2a)) |t|^{1/a} (1 - i sgn(ct) tan(pi/(2a)))}.
// Gamma(1-1/a) < 0 and cos(pi/(2a)) < 0 on (1/2,1), so the real part of the
// exponent is <= 0 and |CF| <= 1.
inline std::complex<double> stable_cf(double t, double alpha, double c,
                                      double A) {
  if (!(alpha > 0.5 && alpha < 1.0))
    throw std::domain_error("stable_cf: need alpha in (1/2, 1)");
  if (c == 0.0) throw std::domain_error("stable_cf: need c != 0");
  if (!(A > 0.0)) throw std::domain_error("stable_cf: need A > 0");
  if (t == 0.0) return {1.0, 0.0};
  const double ia = 1.0 / alpha;
  const double gamma_neg = std::tgamma(1.0 - ia);  // negative on (1/2,1)
  const double cosv = std::cos(std::numbers::pi / (2.0 * alpha));
  const double tanv = std::tan(std::numbers::pi / (2.0 * alpha));
  const double sgn = (c * t > 0) ? 1.0 : -1.0;
  const double mag =
      A * std::pow(std::fabs(c), ia) * gamma_neg * cosv * std::pow(std::fabs(t), ia);
  const std::complex<double> expo(-mag, mag * sgn * tanv);
  return std::exp(expo);
}

inline std::vector<std::complex<double>> empirical_cf(
    const SampleBatch& batch, std::span<const double> t_grid) {
  if (batch.values.empty())
    throw std::invalid_argument("empirical_cf: empty batch");
  std::vector<std::complex<double>> out(t_grid.size());
  for (std::size_t g = 0; g < t_grid.size(); ++g) {
    double re = 0.0, im = 0.0;
    for (double s : batch.values) {
      re += std::cos(t_grid[g] * s);
      im += std::sin(t_grid[g] * s);
    }
    const double inv = 1.0 / static_cast<double>(batch.values.size());
    out[g] = {re * inv, im * inv};
  }
  return out;
}

// KS distance of the batch against a distribution descriptor.
template <typename Cdf>
double ks_against(const SampleBatch& batch, Cdf&& cdf) {
  return ks_statistic(batch.values, std::forward<Cdf>(cdf));
}

struct LimitVerdict {
  LimitCaseKind kind = LimitCaseKind::CLT;
  std::uint64_t n = 0;
  std::size_t M = 0;
  double c_value = 0.0;
  double A = 0.0;
  double statistic = 0.0;   // KS or sup-CF distance
  double threshold = 0.0;
  bool pass = false;
  double fitted_sigma = 0.0;     // CLT cases
  bool sigma_near_zero = false;  // degenerate-limit flag
  double tail_slope = 0.0;       // stable case
  double envelope_cf = 0.0;      // case-2 Holder envelope constant
  std::string detail;
};

// Numeric check of |f(x, w) - f(0, w)| <= C_f x^gamma; returns the observed
// C_f over a grid of x and sampled symbol prefixes.
inline double holder_envelope_constant(const Observable& f,
                                       const ModelParams& mp,
                                       std::uint64_t seed = 1) {
  const auto h = static_cast<std::size_t>(std::max(f.symbol_horizon, 0));
  double cf = 0.0;
  for (int rep = 0; rep < (h == 0 ? 1 : 32); ++rep) {
    SymbolStream stream(mp, derive_seed(seed, rep));
    auto view = stream.view(h);
    const double f0 = f.eval(0.0, view);
    for (int i = 1; i <= 2000; ++i) {
      const double x = static_cast<double>(i) / 2000.0;
      cf = std::max(cf, std::fabs(f.eval(x, view) - f0) /
                            std::pow(x, f.holder_exponent));
    }
  }
  return cf;
}

// Normalize S_n f by the case's B_n and compare against the case's target:
// KS to a fitted normal (cases 1-2), KS to N(0,1) (case 3), sup-CF distance
// against the displayed stable law plus a tail-index fit (case 4).
// The observable must be centered; hypothesis violations throw before any
// sampling.
inline LimitVerdict run_limit_case(const ModelParams& mp, const Observable& f,
                                   const LimitCase& lc,
                                   const DensityEstimate& d, double A,
                                   std::uint64_t n, std::size_t M,
                                   std::uint64_t seed, unsigned workers = 1,
                                   double ks_threshold = 0.05,
                                   double cf_threshold = 0.05) {
  const double c = f.c_value;
  const bool c_zero = std::fabs(c) <= 1e-12;
  switch (lc.kind) {
    case LimitCaseKind::CLT:
      if (!(mp.alpha < 0.5))
        throw std::invalid_argument("run_limit_case: CLT case needs alpha < 1/2");
      break;
    case LimitCaseKind::CLT_centered: {
      if (!(mp.alpha >= 0.5 && mp.alpha < 1.0))
        throw std::invalid_argument(
            "run_limit_case: centered case needs alpha in [1/2, 1)");
      if (!c_zero)
        throw std::invalid_argument(
            "run_limit_case: centered case needs c = E_w f(0, w) = 0");
      const double gamma_req = (mp.beta / mp.alpha) * (mp.alpha - 0.5);
      if (!(f.holder_exponent > gamma_req))
        throw std::invalid_argument(
            "run_limit_case: Holder exponent fails gamma > (beta/alpha)(alpha - 1/2)");
      break;
    }
    case LimitCaseKind::LogNormal_halfcase:
      if (std::fabs(mp.alpha - 0.5) > 1e-12 || c_zero)
        throw std::invalid_argument(
            "run_limit_case: half case needs alpha = 1/2 and c != 0");
      break;
    case LimitCaseKind::Stable:
      if (!(mp.alpha > 0.5 && mp.alpha < 1.0) || c_zero)
        throw std::invalid_argument(
            "run_limit_case: stable case needs alpha in (1/2,1) and c != 0");
      break;
  }

  LimitVerdict v;
  v.kind = lc.kind;
  v.n = n;
  v.M = M;
  v.c_value = c;
  v.A = A;
  if (lc.kind == LimitCaseKind::CLT_centered)
    v.envelope_cf = holder_envelope_constant(f, mp, seed);

  SampleBatch batch = birkhoff_samples(f, mp, d, n, M, seed, workers);
  const double bn = lc.normalizer(static_cast<double>(n), c, A, mp.alpha);
  for (auto& s : batch.values) s /= bn;

  switch (lc.kind) {
    case LimitCaseKind::CLT:
    case LimitCaseKind::CLT_centered: {
      const auto ms = mean_stderr(batch.values);
      v.fitted_sigma = ms.sd;
      v.sigma_near_zero = ms.sd < 1e-6;
      v.statistic = v.sigma_near_zero
                        ? 0.0
                        : ks_against(batch, [&](double x) {
                            return normal_cdf(x, ms.mean, ms.sd);
                          });
      v.threshold = ks_threshold;
      v.pass = v.statistic < v.threshold;
      v.detail = v.sigma_near_zero ? "degenerate limit (sigma ~ 0)"
                                   : "KS against fitted normal";
      break;
    }
    case LimitCaseKind::LogNormal_halfcase: {
      v.statistic = ks_against(batch, [](double x) { return normal_cdf(x); });
      v.threshold = ks_threshold;
      v.pass = v.statistic < v.threshold;
      v.detail = "KS against standard normal";
      break;
    }
    case LimitCaseKind::Stable: {
      std::vector<double> ts;
      for (int i = -20; i <= 20; ++i) ts.push_back(0.25 * i);
      const auto ecf = empirical_cf(batch, ts);
      double sup = 0.0;
      for (std::size_t g = 0; g < ts.size(); ++g) {
        const auto target = ts[g] == 0.0
                                ? std::complex<double>(1.0, 0.0)
                                : stable_cf(ts[g], mp.alpha, c, A);
        sup = std::max(sup, std::abs(ecf[g] - target));
      }
      v.statistic = sup;
      v.threshold = cf_threshold;

      // tail index: slope of log P(|W| > z) over one decade above q95
      std::vector<double> absw;
      absw.reserve(batch.values.size());
      for (double s : batch.values) absw.push_back(std::fabs(s));
      const double z0 = quantile(absw, 0.95);
      std::vector<double> zs, ps, ws;
      for (int j = 0; j <= 8; ++j) {
        const double z = z0 * std::pow(10.0, static_cast<double>(j) / 8.0);
        std::size_t cnt = 0;
        for (double a : absw)
          if (a > z) ++cnt;
        if (cnt < 5) break;
        zs.push_back(z);
        ps.push_back(static_cast<double>(cnt) / static_cast<double>(absw.size()));
        ws.push_back(static_cast<double>(cnt));
      }
      v.tail_slope = fit_loglog(zs, ps, ws).slope;
      v.pass = v.statistic < v.threshold;
      v.detail = "sup |empirical CF - stable CF| on t grid";
      break;
    }
  }
  return v;
}

}  // namespace irand
