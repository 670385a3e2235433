#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "skelot/rational.hpp"

namespace skelot {

// Seeded generator with hand-rolled draw functions. std::uniform_*
// distributions are implementation-defined, so we avoid them to keep
// artifacts byte-identical across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t bits() { return eng_(); }

  /// Uniform in [0,1) with 53-bit resolution.
  double uniform() { return std::ldexp(static_cast<double>(eng_() >> 11), -53); }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Uniform integer in [0, n).
  uint64_t index(uint64_t n) {
    // Rejection sampling keeps the draw exactly uniform.
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v = eng_();
    while (v >= limit) v = eng_();
    return v % n;
  }

  long long integer(long long lo, long long hi) {
    return lo + static_cast<long long>(index(static_cast<uint64_t>(hi - lo + 1)));
  }

  /// Random rational a/b with a in [lo_num, hi_num], b in [1, max_den].
  Rat rational(long long lo_num, long long hi_num, long long max_den) {
    long long den = integer(1, max_den);
    long long num = integer(lo_num, hi_num);
    return rat_frac(num, den);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace skelot
