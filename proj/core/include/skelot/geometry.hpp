#pragma once

#include <array>
#include <optional>
#include <vector>

#include "skelot/rational.hpp"

namespace skelot {

/// Axis-aligned rational box in R^n. Degenerate ranges (lo == hi) are allowed.
struct Box {
  RatVec lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }
  Rat volume() const;
  bool contains(const RatVec& x, bool strict = false) const;
};

/// Closed halfspace {x : a.x <= b}.
struct Halfspace {
  RatVec a;
  Rat b;
};

/// Exact convex polytope in ambient dimension 1 or 2, stored by vertices.
/// 1-D: sorted endpoints. 2-D: counter-clockwise, starting at the
/// lexicographically smallest vertex, no three collinear vertices kept.
/// The canonical vertex order makes serialisation deterministic.
class ConvexPoly {
 public:
  ConvexPoly() = default;

  static ConvexPoly hull(int ambient, const std::vector<RatVec>& points);
  static ConvexPoly from_box(const Box& b);

  int ambient() const { return ambient_; }
  /// Affine dimension (-1 when empty).
  int dim() const;
  bool empty() const { return verts_.empty(); }

  const std::vector<RatVec>& vertices() const { return verts_; }

  /// Full-dimensional Lebesgue measure (0 when dim < ambient).
  Rat volume() const;
  RatVec centroid() const;

  bool contains(const RatVec& x, bool strict = false) const;

  /// Intersection with {x : a.x <= b}.
  ConvexPoly clip(const RatVec& a, const Rat& b) const;
  ConvexPoly clip(const Halfspace& h) const { return clip(h.a, h.b); }
  ConvexPoly intersect(const Box& b) const;

  /// Facet description; cross-validated against the vertex list.
  std::vector<Halfspace> halfspaces() const;

  Box bounding_box() const;

 private:
  int ambient_ = 0;
  std::vector<RatVec> verts_;

  void canonicalize();
};

/// Double-precision convex polygon used in solver inner loops (power cells).
struct PolyD {
  std::vector<std::array<double, 2>> v;  // ccw

  double area() const;
  /// Clip against {x : a.x <= b}.
  PolyD clip(const std::array<double, 2>& a, double b) const;
  static PolyD from_ccw(std::vector<std::array<double, 2>> pts) { return PolyD{std::move(pts)}; }
};

}  // namespace skelot
