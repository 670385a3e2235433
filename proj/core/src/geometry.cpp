#include "skelot/geometry.hpp"

#include <algorithm>

#include "skelot/error.hpp"

namespace skelot {

namespace {

// Cross product of (b-a) x (c-a); sign gives orientation.
Rat cross3(const RatVec& a, const RatVec& b, const RatVec& c) {
  return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
}

bool lex_less(const RatVec& a, const RatVec& b) {
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

}  // namespace

Rat Box::volume() const {
  Rat v = 1;
  for (size_t i = 0; i < lo.size(); ++i) v *= hi[i] - lo[i];
  return v;
}

bool Box::contains(const RatVec& x, bool strict) const {
  for (size_t i = 0; i < lo.size(); ++i) {
    if (strict ? !(lo[i] < x[i] && x[i] < hi[i]) : !(lo[i] <= x[i] && x[i] <= hi[i]))
      return false;
  }
  return true;
}

ConvexPoly ConvexPoly::hull(int ambient, const std::vector<RatVec>& points) {
  ConvexPoly p;
  p.ambient_ = ambient;
  if (ambient != 1 && ambient != 2)
    throw Error(ErrorCode::internal, "exact hulls are implemented for ambient dimension 1 and 2");
  if (points.empty()) return p;

  if (ambient == 1) {
    Rat lo = points[0][0], hi = points[0][0];
    for (const auto& q : points) {
      lo = std::min(lo, q[0]);
      hi = std::max(hi, q[0]);
    }
    p.verts_ = {RatVec{lo}};
    if (hi != lo) p.verts_.push_back(RatVec{hi});
    return p;
  }

  // Andrew's monotone chain, exact arithmetic, strictly convex output.
  std::vector<RatVec> pts = points;
  std::sort(pts.begin(), pts.end(), lex_less);
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() <= 2) {
    p.verts_ = pts;
    return p;
  }
  std::vector<RatVec> h(2 * pts.size());
  size_t k = 0;
  for (const auto& q : pts) {
    while (k >= 2 && cross3(h[k - 2], h[k - 1], q) <= 0) --k;
    h[k++] = q;
  }
  const size_t lower = k + 1;
  for (auto it = pts.rbegin() + 1; it != pts.rend(); ++it) {
    while (k >= lower && cross3(h[k - 2], h[k - 1], *it) <= 0) --k;
    h[k++] = *it;
  }
  h.resize(k - 1);
  // Collinear input collapses to a segment: keep extreme points only.
  if (h.size() == 2 || h.size() == 1) {
    p.verts_ = h;
    return p;
  }
  p.verts_ = std::move(h);
  p.canonicalize();
  return p;
}

ConvexPoly ConvexPoly::from_box(const Box& b) {
  ConvexPoly p;
  p.ambient_ = b.dim();
  if (p.ambient_ == 1) {
    p.verts_ = {RatVec{b.lo[0]}};
    if (b.hi[0] != b.lo[0]) p.verts_.push_back(RatVec{b.hi[0]});
    return p;
  }
  if (p.ambient_ != 2)
    throw Error(ErrorCode::internal, "ConvexPoly::from_box needs dimension 1 or 2");
  std::vector<RatVec> pts = {
      {b.lo[0], b.lo[1]}, {b.hi[0], b.lo[1]}, {b.hi[0], b.hi[1]}, {b.lo[0], b.hi[1]}};
  return hull(2, pts);
}

void ConvexPoly::canonicalize() {
  if (ambient_ != 2 || verts_.size() < 3) {
    std::sort(verts_.begin(), verts_.end(), lex_less);
    verts_.erase(std::unique(verts_.begin(), verts_.end()), verts_.end());
    return;
  }
  // Rotate so the lexicographically smallest vertex comes first (ccw kept).
  size_t best = 0;
  for (size_t i = 1; i < verts_.size(); ++i)
    if (lex_less(verts_[i], verts_[best])) best = i;
  std::rotate(verts_.begin(), verts_.begin() + best, verts_.end());
}

int ConvexPoly::dim() const {
  if (verts_.empty()) return -1;
  if (verts_.size() == 1) return 0;
  if (ambient_ == 1) return 1;
  return verts_.size() == 2 ? 1 : 2;
}

Rat ConvexPoly::volume() const {
  if (dim() < ambient_) return 0;
  if (ambient_ == 1) return verts_.back()[0] - verts_.front()[0];
  Rat twice = 0;
  for (size_t i = 0; i < verts_.size(); ++i) {
    const auto& a = verts_[i];
    const auto& b = verts_[(i + 1) % verts_.size()];
    twice += a[0] * b[1] - b[0] * a[1];
  }
  return twice / 2;
}

RatVec ConvexPoly::centroid() const {
  if (verts_.empty()) throw Error(ErrorCode::internal, "centroid of empty polytope");
  if (ambient_ == 1) {
    return {(verts_.front()[0] + verts_.back()[0]) / 2};
  }
  if (dim() < 2) {
    RatVec c(2, Rat(0));
    for (const auto& v : verts_) {
      c[0] += v[0];
      c[1] += v[1];
    }
    c[0] /= static_cast<long>(verts_.size());
    c[1] /= static_cast<long>(verts_.size());
    return c;
  }
  Rat a6 = 0, cx = 0, cy = 0;
  for (size_t i = 0; i < verts_.size(); ++i) {
    const auto& p = verts_[i];
    const auto& q = verts_[(i + 1) % verts_.size()];
    Rat w = p[0] * q[1] - q[0] * p[1];
    a6 += w;
    cx += (p[0] + q[0]) * w;
    cy += (p[1] + q[1]) * w;
  }
  a6 *= 3;
  return {cx / a6, cy / a6};
}

bool ConvexPoly::contains(const RatVec& x, bool strict) const {
  if (verts_.empty()) return false;
  if (ambient_ == 1) {
    const Rat& lo = verts_.front()[0];
    const Rat& hi = verts_.back()[0];
    return strict ? (lo < x[0] && x[0] < hi) : (lo <= x[0] && x[0] <= hi);
  }
  if (dim() < 2) {
    if (strict) return false;
    if (verts_.size() == 1) return x == verts_[0];
    // Segment membership.
    if (cross3(verts_[0], verts_[1], x) != 0) return false;
    for (int d = 0; d < 2; ++d) {
      Rat lo = std::min(verts_[0][d], verts_[1][d]);
      Rat hi = std::max(verts_[0][d], verts_[1][d]);
      if (x[d] < lo || x[d] > hi) return false;
    }
    return true;
  }
  for (size_t i = 0; i < verts_.size(); ++i) {
    Rat c = cross3(verts_[i], verts_[(i + 1) % verts_.size()], x);
    if (strict ? c <= 0 : c < 0) return false;
  }
  return true;
}

ConvexPoly ConvexPoly::clip(const RatVec& a, const Rat& b) const {
  ConvexPoly out;
  out.ambient_ = ambient_;
  if (verts_.empty()) return out;

  if (ambient_ == 1) {
    // a[0]*x <= b
    Rat lo = verts_.front()[0], hi = verts_.back()[0];
    if (a[0] == 0) {
      if (b >= 0) out.verts_ = verts_;
      return out;
    }
    Rat t = b / a[0];
    if (a[0] > 0)
      hi = std::min(hi, t);
    else
      lo = std::max(lo, t);
    if (lo > hi) return out;
    out.verts_ = {RatVec{lo}};
    if (hi != lo) out.verts_.push_back(RatVec{hi});
    return out;
  }

  // Sutherland-Hodgman with exact intersections.
  std::vector<RatVec> res;
  const size_t m = verts_.size();
  if (m == 1) {
    if (dot(a, verts_[0]) <= b) res = verts_;
    out.verts_ = res;
    return out;
  }
  std::vector<RatVec> ring = verts_;
  if (m == 2) ring.push_back(verts_[0]);  // traverse the segment both ways
  const size_t rm = ring.size();
  for (size_t i = 0; i < rm; ++i) {
    const RatVec& p = ring[i];
    const RatVec& q = ring[(i + 1) % rm];
    Rat dp = dot(a, p) - b;
    Rat dq = dot(a, q) - b;
    if (dp <= 0) res.push_back(p);
    if ((dp < 0 && dq > 0) || (dp > 0 && dq < 0)) {
      Rat t = dp / (dp - dq);
      res.push_back({p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])});
    }
  }
  if (res.empty()) return out;
  return hull(2, res);
}

ConvexPoly ConvexPoly::intersect(const Box& b) const {
  ConvexPoly out = *this;
  for (int d = 0; d < b.dim(); ++d) {
    RatVec up(b.dim(), Rat(0)), dn(b.dim(), Rat(0));
    up[d] = 1;
    dn[d] = -1;
    out = out.clip(up, b.hi[d]);
    out = out.clip(dn, -b.lo[d]);
    if (out.empty()) break;
  }
  return out;
}

std::vector<Halfspace> ConvexPoly::halfspaces() const {
  std::vector<Halfspace> hs;
  if (verts_.empty()) return hs;
  if (ambient_ == 1) {
    hs.push_back({{Rat(-1)}, -verts_.front()[0]});
    hs.push_back({{Rat(1)}, verts_.back()[0]});
    return hs;
  }
  if (dim() < 2) {
    // Segment or point: describe by equalities split into two inequalities
    // plus the segment's span bounds.
    if (verts_.size() == 1) {
      for (int d = 0; d < 2; ++d) {
        RatVec up(2, Rat(0)), dn(2, Rat(0));
        up[d] = 1;
        dn[d] = -1;
        hs.push_back({up, verts_[0][d]});
        hs.push_back({dn, -verts_[0][d]});
      }
      return hs;
    }
    RatVec n = {verts_[1][1] - verts_[0][1], verts_[0][0] - verts_[1][0]};
    Rat off = dot(n, verts_[0]);
    hs.push_back({n, off});
    hs.push_back({{-n[0], -n[1]}, -off});
    RatVec t = {verts_[1][0] - verts_[0][0], verts_[1][1] - verts_[0][1]};
    hs.push_back({t, dot(t, verts_[1])});
    hs.push_back({{-t[0], -t[1]}, -dot(t, verts_[0])});
    return hs;
  }
  for (size_t i = 0; i < verts_.size(); ++i) {
    const auto& p = verts_[i];
    const auto& q = verts_[(i + 1) % verts_.size()];
    // Inward normal for ccw ring is (-(qy-py), qx-px); outward is negated.
    RatVec n = {q[1] - p[1], p[0] - q[0]};
    hs.push_back({n, dot(n, p)});
  }
  return hs;
}

Box ConvexPoly::bounding_box() const {
  if (verts_.empty()) throw Error(ErrorCode::internal, "bounding box of empty polytope");
  Box b;
  b.lo = verts_[0];
  b.hi = verts_[0];
  for (const auto& v : verts_) {
    for (size_t d = 0; d < v.size(); ++d) {
      b.lo[d] = std::min(b.lo[d], v[d]);
      b.hi[d] = std::max(b.hi[d], v[d]);
    }
  }
  return b;
}

double PolyD::area() const {
  double twice = 0;
  for (size_t i = 0; i < v.size(); ++i) {
    const auto& a = v[i];
    const auto& b = v[(i + 1) % v.size()];
    twice += a[0] * b[1] - b[0] * a[1];
  }
  return 0.5 * twice;
}

PolyD PolyD::clip(const std::array<double, 2>& a, double b) const {
  PolyD out;
  const size_t m = v.size();
  if (m == 0) return out;
  out.v.reserve(m + 2);
  for (size_t i = 0; i < m; ++i) {
    const auto& p = v[i];
    const auto& q = v[(i + 1) % m];
    double dp = a[0] * p[0] + a[1] * p[1] - b;
    double dq = a[0] * q[0] + a[1] * q[1] - b;
    if (dp <= 0) out.v.push_back(p);
    if ((dp < 0 && dq > 0) || (dp > 0 && dq < 0)) {
      double t = dp / (dp - dq);
      out.v.push_back({p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])});
    }
  }
  return out;
}

}  // namespace skelot
