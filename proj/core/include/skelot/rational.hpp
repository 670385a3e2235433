#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>
#include <vector>

#include "skelot/error.hpp"

namespace skelot {

// Exact rational scalar. All structural geometry (charts, walls, hulls,
// shifts) is kept rational; doubles appear only at quadrature/solver time.
using Rat = mpq_class;
using RatVec = std::vector<Rat>;

/// Parses "p/q" or "p" (q > 0 enforced by canonicalisation).
/// Throws Error(malformed_input) on anything else.
Rat rat_parse(std::string_view s);

/// Serialises as "p/q", or "p" when the denominator is 1.
std::string rat_str(const Rat& r);

inline double rat_d(const Rat& r) { return r.get_d(); }

/// Integer promotion; long long and long coincide on the supported targets.
inline Rat rat_ll(long long v) { return Rat(static_cast<long>(v)); }

inline Rat rat_frac(long long num, long long den) {
  Rat r(static_cast<long>(num), static_cast<long>(den));
  r.canonicalize();
  return r;
}

RatVec ratvec_parse(const std::vector<std::string>& parts);
std::vector<std::string> ratvec_str(const RatVec& v);
std::vector<double> ratvec_d(const RatVec& v);

Rat dot(const RatVec& a, const RatVec& b);
RatVec sub(const RatVec& a, const RatVec& b);
RatVec add(const RatVec& a, const RatVec& b);

/// Fixed-format float serialisation used by every artifact writer:
/// shortest-round-trip is deliberately avoided, 17 significant digits
/// always, so outputs are byte-stable across runs and thread counts.
std::string fmt17(double x);

}  // namespace skelot
