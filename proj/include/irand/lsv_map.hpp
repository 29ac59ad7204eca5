#pragma once

// Liverani-Saussol-Vaienti maps
//
//   T_a(x) = x (1 + 2^a x^a)  on [0, 1/2],     T_a(x) = 2x - 1  on (1/2, 1],
//
// their monotone left-branch inverse, and the deterministic backward orbit
// x_1 = 1/2, x_{n} = T_a^{-1}|[0,1/2](x_{n-1}). The neutral fixed point sits
// at x = 0; x = 1/2 belongs to the left branch.
//
// The left branch is evaluated as x + x*(2x)^a, which is exact at both
// endpoints: T_a(0) = 0 and T_a(1/2) = 1 for every a. Exponents used heavily
// by the experiments (1/2, 3/4, 1, 2, 3) get pow-free fast paths; the value
// agrees with std::pow to a couple of ulp, and one code path is used
// consistently so runs are bit-reproducible.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace irand {

struct MapParams {
  double alpha = 1.0;

  MapParams() = default;
  explicit MapParams(double a) : alpha(a) {
    if (!(a > 0.0) || !std::isfinite(a))
      throw std::invalid_argument("MapParams: alpha must be positive and finite");
    if (a == 0.5)
      kind_ = Kind::Sqrt;
    else if (a == 0.75)
      kind_ = Kind::ThreeQuarters;
    else if (a == 1.0)
      kind_ = Kind::One;
    else if (a == 2.0)
      kind_ = Kind::Two;
    else if (a == 3.0)
      kind_ = Kind::Three;
    else
      kind_ = Kind::General;
  }

  // (2x)^alpha for x in [0, 1/2]; the nonlinearity of the left branch.
  double gap(double x) const {
    const double t = 2.0 * x;
    switch (kind_) {
      case Kind::Sqrt:
        return std::sqrt(t);
      case Kind::ThreeQuarters:
        return std::sqrt(t * std::sqrt(t));
      case Kind::One:
        return t;
      case Kind::Two:
        return t * t;
      case Kind::Three:
        return t * t * t;
      case Kind::General:
        return std::pow(t, alpha);
    }
    return std::pow(t, alpha);
  }

 private:
  enum class Kind { General, Sqrt, ThreeQuarters, One, Two, Three };
  Kind kind_ = Kind::One;
};

namespace detail {
inline void require_unit_interval(double v, const char* who) {
  if (!(v >= 0.0 && v <= 1.0))
    throw std::domain_error(std::string(who) + ": argument outside [0,1]");
}
}  // namespace detail

inline double lsv_forward(const MapParams& p, double x) {
  detail::require_unit_interval(x, "lsv_forward");
  if (x > 0.5) return 2.0 * x - 1.0;  // exact: 2x in (1,2], Sterbenz subtraction
  return x + x * p.gap(x);
}

// Inverse of the left branch: the unique x in [0,1/2] with x(1+(2x)^a) = y.
// Safeguarded Newton on the convex increasing g(x) = x + x*(2x)^a - y,
// seeded at min(y, 1/2); bisection fallback keeps the bracket valid.
// `hint`, when inside the bracket, is used as the starting point (backward
// orbits move slowly, so warm starts cut the iteration count).
inline double lsv_left_inverse(const MapParams& p, double y, double hint = -1.0) {
  detail::require_unit_interval(y, "lsv_left_inverse");
  if (y == 0.0) return 0.0;
  double lo = 0.0, hi = 0.5;
  double x = (hint > 0.0 && hint < 0.5) ? hint : std::min(y, 0.5);
  for (int it = 0; it < 120; ++it) {
    const double t = p.gap(x);
    const double g = x + x * t - y;
    if (g == 0.0) return x;
    if (g > 0.0)
      hi = x;
    else
      lo = x;
    const double deriv = 1.0 + (1.0 + p.alpha) * t;
    double next = x - g / deriv;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - x) <= 1e-15) return next;
    x = next;
  }
  // The branch is smooth and strictly increasing; reaching this means the
  // bracket collapsed to roundoff width.
  if (hi - lo <= 4e-15) return 0.5 * (lo + hi);
  throw std::runtime_error("lsv_left_inverse: no convergence");
}

// Backward orbit of 1/2 under the left-branch inverse:
// x_1 = 1/2, x_{n+1} = T_a^{-1}|[0,1/2](x_n). n^{1/a} x_n -> a^{-1/a}/2.
inline std::vector<double> deterministic_xseq(const MapParams& p, std::size_t n) {
  if (n == 0) throw std::invalid_argument("deterministic_xseq: n must be >= 1");
  std::vector<double> xs(n);
  xs[0] = 0.5;
  for (std::size_t k = 1; k < n; ++k)
    xs[k] = lsv_left_inverse(p, xs[k - 1], xs[k - 1]);
  return xs;
}

// c(alpha) = alpha^{-1/alpha} / 2, the limit of n^{1/alpha} x_n(alpha).
inline double c_alpha(double alpha) {
  return 0.5 * std::pow(alpha, -1.0 / alpha);
}

}  // namespace irand
