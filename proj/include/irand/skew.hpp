#pragma once

// Skew product step S(x, omega) = (T_{alpha(omega)} x, phi omega). The state
// carries its symbol stream plus the accumulated log cylinder weight
// log P^n_omega of the symbols consumed so far.

#include <cmath>
#include <cstdint>
#include <utility>

#include "irand/symbols.hpp"

namespace irand {

struct SkewState {
  double x = 0.0;
  SymbolStream stream;
  double logweight = 0.0;
  std::uint64_t steps = 0;

  SkewState(double x0, SymbolStream s) : x(x0), stream(std::move(s)) {}
  SkewState(double x0, const ModelParams& mp, std::uint64_t seed)
      : x(x0), stream(mp, seed) {}
};

inline SkewState& skew_step(SkewState& s, const ModelParams& mp) {
  const Symbol sym = s.stream.at(0);
  s.x = lsv_forward(mp.param_of(sym), s.x);
  s.logweight += std::log(mp.prob_of(sym));
  s.stream.shift();
  ++s.steps;
  return s;
}

}  // namespace irand
