#pragma once

// The randomizing process. A point omega of the noise space enters the
// dynamics only through its itinerary alpha(omega), alpha(phi omega), ...
// under the base-(p1,p2) shift, and the push-forward of Lebesgue measure on
// omega is exactly the i.i.d. Bernoulli(p1) measure on itineraries. Streams
// therefore generate symbols directly: Fast selects T_alpha, Slow selects
// T_beta, and a cylinder of length n carries weight p1^{#Fast} p2^{#Slow}.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "irand/lsv_map.hpp"
#include "irand/rng.hpp"

namespace irand {

enum class Symbol : std::uint8_t { Fast = 0, Slow = 1 };

struct ModelParams {
  double alpha = 0.5;
  double beta = 0.75;
  double p1 = 0.5;
  MapParams fast;
  MapParams slow;

  ModelParams() : ModelParams(0.5, 0.75, 0.5) {}
  ModelParams(double a, double b, double p)
      : alpha(a), beta(b), p1(p), fast(a), slow(b) {
    if (!(a < b))
      throw std::invalid_argument("ModelParams: need alpha < beta");
    // p1 in {0,1} is admitted for degenerate controls; experiment configs
    // enforce the open interval separately.
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("ModelParams: need p1 in [0,1]");
  }

  double p2() const { return 1.0 - p1; }
  const MapParams& param_of(Symbol s) const {
    return s == Symbol::Fast ? fast : slow;
  }
  double prob_of(Symbol s) const { return s == Symbol::Fast ? p1 : p2(); }
};

using SymbolString = std::vector<Symbol>;

inline double cylinder_weight(std::span<const Symbol> sym, const ModelParams& mp) {
  double w = 1.0;
  for (Symbol s : sym) w *= mp.prob_of(s);
  return w;
}

// Lazily extended itinerary with a shift position. Symbol k (relative to the
// current shift) is alpha(phi^{offset+k} omega); once generated, a symbol at
// a fixed absolute index never changes, so trajectories are reproducible and
// lookahead by downstream consumers is safe.
class SymbolStream {
 public:
  SymbolStream(double p1, std::uint64_t seed) : rng_(seed), p1_(p1) {}
  SymbolStream(const ModelParams& mp, std::uint64_t seed)
      : SymbolStream(mp.p1, seed) {}

  Symbol at(std::size_t k) {
    ensure(k + 1);
    return buf_[offset_ + k];
  }

  void shift(std::size_t by = 1) { offset_ += by; }
  std::size_t offset() const { return offset_; }

  // Make symbols 0..count-1 (relative to the shift) available.
  void ensure(std::size_t count) {
    const std::size_t need = offset_ + count;
    while (buf_.size() < need)
      buf_.push_back(rng_.bernoulli(p1_) ? Symbol::Fast : Symbol::Slow);
  }

  std::span<const Symbol> view(std::size_t count) {
    ensure(count);
    return {buf_.data() + offset_, count};
  }

 private:
  Xoshiro256pp rng_;
  std::vector<Symbol> buf_;
  std::size_t offset_ = 0;
  double p1_;
};

inline SymbolString draw_symbols(const ModelParams& mp, std::size_t n,
                                 std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("draw_symbols: n must be >= 1");
  Xoshiro256pp rng(seed);
  SymbolString out(n);
  for (auto& s : out) s = rng.bernoulli(mp.p1) ? Symbol::Fast : Symbol::Slow;
  return out;
}

// All 2^n symbol strings with their cylinder weights. Entry i maps bit
// (n-1-j) of i to symbol j, so strings appear in lexicographic order with
// Fast first: n=2 gives FF, FS, SF, SS.
inline std::vector<std::pair<SymbolString, double>> cylinder_enumerate(
    const ModelParams& mp, std::size_t n) {
  if (n == 0) throw std::invalid_argument("cylinder_enumerate: n must be >= 1");
  if (n > 24)
    throw std::length_error("cylinder_enumerate: n > 24 would enumerate > 16M cylinders");
  std::vector<std::pair<SymbolString, double>> out;
  out.reserve(std::size_t{1} << n);
  for (std::uint64_t i = 0; i < (std::uint64_t{1} << n); ++i) {
    SymbolString s(n);
    for (std::size_t j = 0; j < n; ++j)
      s[j] = ((i >> (n - 1 - j)) & 1) ? Symbol::Slow : Symbol::Fast;
    out.emplace_back(std::move(s), 0.0);
    out.back().second = cylinder_weight(out.back().first, mp);
  }
  return out;
}

}  // namespace irand
