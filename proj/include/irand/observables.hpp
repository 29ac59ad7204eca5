#pragma once

// Observables on the square: f(x, omega) where the omega-dependence enters
// through finitely many leading symbols (symbol_horizon). c_value carries
// E_omega f(0, omega), exactly computable when the horizon is finite.

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>

#include "irand/symbols.hpp"

namespace irand {

struct Observable {
  std::function<double(double, std::span<const Symbol>)> eval;
  int symbol_horizon = 0;       // leading symbols the evaluator reads
  double holder_exponent = 1.0; // Holder regularity in x, in (0, 1]
  double c_value = 0.0;         // E_omega f(0, omega)

  double operator()(double x, std::span<const Symbol> sym = {}) const {
    return eval(x, sym);
  }
};

inline Observable make_x_observable(std::function<double(double)> g,
                                    double holder = 1.0) {
  Observable f;
  f.eval = [g = std::move(g)](double x, std::span<const Symbol>) { return g(x); };
  f.symbol_horizon = 0;
  f.holder_exponent = holder;
  f.c_value = f.eval(0.0, {});
  return f;
}

// C^infinity bump supported on (lo, hi), peak value 1 at the midpoint.
inline double smooth_bump(double x, double lo, double hi) {
  if (x <= lo || x >= hi) return 0.0;
  const double s = 2.0 * (x - lo) / (hi - lo) - 1.0;
  return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

// E_omega f(0, omega) by cylinder enumeration over the symbol horizon.
inline double expected_at_zero(const Observable& f, const ModelParams& mp) {
  if (f.symbol_horizon <= 0) return f.eval(0.0, {});
  double e = 0.0;
  for (const auto& [sym, w] :
       cylinder_enumerate(mp, static_cast<std::size_t>(f.symbol_horizon)))
    e += w * f.eval(0.0, sym);
  return e;
}

}  // namespace irand
