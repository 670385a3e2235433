#include "skelot/okounkov.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "skelot/error.hpp"

namespace skelot {

Anchor make_anchor(const Skeleton& sk, const BasisFamily& family, int l_max,
                   const SkeletonPoint& y) {
  if (!is_sufficiently_irrational(sk, y, family, l_max))
    throw Error(ErrorCode::non_unique_gradient,
                "anchor lies on a wall at some degree <= " + std::to_string(l_max));
  Anchor a;
  a.y = y;
  a.irrationality_level = l_max;
  a.yd = ratvec_d(y.coords);
  return a;
}

GradientSemigroup gradient_semigroup(const Skeleton& sk, const BasisFamily& family,
                                     const Anchor& y) {
  GradientSemigroup g;
  g.anchor = y;
  for (const auto& [l, basis] : family) {
    if (l > y.irrationality_level) continue;
    std::set<std::vector<long long>> grads;
    for (const auto& s : basis.sections) {
      auto gs = s.gradients_at(sk, y.y);
      if (gs.size() != 1)
        throw Error(ErrorCode::non_unique_gradient,
                    "section '" + s.label + "' has a tied gradient at the anchor");
      grads.insert(*gs.begin());
    }
    if (grads.size() != basis.sections.size())
      throw Error(ErrorCode::non_unique_gradient,
                  "gradient collision at the anchor in degree " + std::to_string(l) +
                      " (basis not valid here)");
    g.l_max = std::max(g.l_max, l);
    g.levels[l] = std::move(grads);
  }
  if (g.levels.empty()) throw Error(ErrorCode::empty_semigroup, "no degrees populated");

  // Additivity audit over every in-range pair of populated levels.
  g.additivity_ok = true;
  for (const auto& [l1, s1] : g.levels) {
    for (const auto& [l2, s2] : g.levels) {
      if (l1 > l2) continue;
      auto it = g.levels.find(l1 + l2);
      if (it == g.levels.end()) continue;
      for (const auto& a : s1) {
        for (const auto& b : s2) {
          std::vector<long long> sum(a.size());
          for (size_t d = 0; d < a.size(); ++d) sum[d] = a[d] + b[d];
          if (!it->second.count(sum)) {
            g.additivity_ok = false;
            std::string msg = "Gamma_" + std::to_string(l1) + " + Gamma_" + std::to_string(l2) +
                              " not inside Gamma_" + std::to_string(l1 + l2);
            if (g.additivity_failures.empty() || g.additivity_failures.back() != msg)
              g.additivity_failures.push_back(msg);
          }
        }
      }
    }
  }
  return g;
}

OkounkovBody okounkov_body(const GradientSemigroup& g) {
  if (g.levels.empty()) throw Error(ErrorCode::empty_semigroup, "empty gradient semigroup");
  if (g.levels.size() < 2)
    throw Error(ErrorCode::empty_semigroup, "need at least two populated degrees");
  const size_t n = g.levels.begin()->second.begin()->size();
  std::vector<RatVec> scaled;
  for (const auto& [l, grads] : g.levels) {
    for (const auto& p : grads) {
      RatVec q(n);
      for (size_t d = 0; d < n; ++d) q[d] = rat_frac(p[d], l);
      scaled.push_back(std::move(q));
    }
  }
  OkounkovBody body;
  body.poly = ConvexPoly::hull(static_cast<int>(n), scaled);
  body.halfspaces = body.poly.halfspaces();
  body.volume = body.poly.volume();
  // Cross-validation: every vertex satisfies each facet inequality, with
  // equality on at least dim supporting facets.
  for (const auto& v : body.poly.vertices()) {
    int tight = 0;
    for (const auto& h : body.halfspaces) {
      Rat s = dot(h.a, v);
      if (s > h.b) throw Error(ErrorCode::internal, "vertex violates facet");
      if (s == h.b) ++tight;
    }
    if (body.poly.dim() == static_cast<int>(n) && tight < body.poly.dim())
      throw Error(ErrorCode::internal, "vertex not supported by enough facets");
  }
  return body;
}

nlohmann::json OkounkovBody::to_json() const {
  nlohmann::json doc;
  doc["vertices"] = nlohmann::json::array();
  for (const auto& v : poly.vertices()) doc["vertices"].push_back(ratvec_str(v));
  doc["halfspaces"] = nlohmann::json::array();
  for (const auto& h : halfspaces) {
    nlohmann::json jh;
    jh["a"] = ratvec_str(h.a);
    jh["b"] = rat_str(h.b);
    doc["halfspaces"].push_back(jh);
  }
  doc["volume"] = rat_str(volume);
  return doc;
}

VolumeCheckReport body_volume_check(const OkounkovBody& body, const GradientSemigroup& g,
                                    const Rat& Ln, int n) {
  VolumeCheckReport r;
  r.volume = body.volume;
  Rat fact = 1;
  for (int i = 2; i <= n; ++i) fact *= i;
  r.expected = Ln / fact;
  r.discrepancy = abs(r.volume - r.expected);
  for (const auto& [l, grads] : g.levels) {
    double ratio = static_cast<double>(grads.size()) / std::pow(static_cast<double>(l), n);
    r.count_ratios.push_back({l, ratio});
  }
  return r;
}

ConvexPoly central_scaling(const ConvexPoly& body, const Rat& factor) {
  RatVec c = body.centroid();
  std::vector<RatVec> scaled;
  for (const auto& v : body.vertices()) {
    RatVec w(v.size());
    for (size_t d = 0; d < v.size(); ++d) w[d] = c[d] + factor * (v[d] - c[d]);
    scaled.push_back(std::move(w));
  }
  return ConvexPoly::hull(body.ambient(), scaled);
}

IntegerPointsReport integer_points_check(const GradientSemigroup& g, const OkounkovBody& body,
                                         const ConvexPoly& K) {
  // Guard: K must sit strictly inside the body interior.
  const int n = K.ambient();
  for (const auto& c : K.vertices())
    if (!body.contains_interior(c))
      throw Error(ErrorCode::p_not_in_body, "K is not strictly inside the body interior");

  IntegerPointsReport rep;
  std::map<int, bool> level_ok;
  const Box kb = K.bounding_box();
  for (const auto& [l, grads] : g.levels) {
    bool ok = true;
    // Enumerate lK ∩ Z^n exactly over the scaled bounding box.
    std::vector<long long> lo(n), hi(n);
    for (int d = 0; d < n; ++d) {
      Rat a = kb.lo[d] * l, b = kb.hi[d] * l;
      lo[d] = static_cast<long long>(std::ceil(rat_d(a) - 1e-12));
      hi[d] = static_cast<long long>(std::floor(rat_d(b) + 1e-12));
      while (Rat(static_cast<long>(lo[d])) < a) ++lo[d];
      while (Rat(static_cast<long>(hi[d])) > b) --hi[d];
    }
    std::vector<long long> pt(n, 0);
    std::function<void(int)> walk = [&](int d) {
      if (d == n) {
        RatVec scaled(n);
        for (int dd = 0; dd < n; ++dd) scaled[dd] = rat_frac(pt[dd], l);
        if (!K.contains(scaled)) return;
        if (!grads.count(pt)) {
          ok = false;
          rep.missing.push_back({0, pt});
        }
        return;
      }
      for (long long v = lo[d]; v <= hi[d]; ++v) {
        pt[d] = v;
        walk(d + 1);
      }
    };
    size_t before = rep.missing.size();
    walk(0);
    for (size_t i = before; i < rep.missing.size(); ++i) rep.missing[i].first = l;
    level_ok[l] = ok;
  }
  // Smallest level such that every populated level from there on is clean.
  rep.l0 = -1;
  for (auto it = level_ok.begin(); it != level_ok.end(); ++it) {
    bool all = true;
    for (auto jt = it; jt != level_ok.end(); ++jt) all = all && jt->second;
    if (all) {
      rep.l0 = it->first;
      break;
    }
  }
  rep.ok = rep.l0 >= 0;
  return rep;
}

BodyMeasure body_measure(const OkounkovBody& body, BodySampleScheme scheme, int resolution) {
  if (resolution <= 0) throw Error(ErrorCode::malformed_input, "resolution must be positive");
  BodyMeasure bm;
  bm.scheme_ = scheme;
  bm.resolution_ = resolution;
  const int n = body.poly.ambient();
  const Box bb = body.poly.bounding_box();
  const Rat step(1, resolution);

  Rat total = 0;
  std::vector<Rat> weights_exact;
  std::vector<long> cells(n);
  for (int d = 0; d < n; ++d) {
    Rat len = bb.hi[d] - bb.lo[d];
    cells[d] = std::max(1L, static_cast<long>(std::ceil(rat_d(len / step) - 1e-12)));
  }
  std::vector<long> idx(n, 0);
  while (true) {
    Box cell;
    cell.lo.resize(n);
    cell.hi.resize(n);
    for (int d = 0; d < n; ++d) {
      cell.lo[d] = bb.lo[d] + step * idx[d];
      Rat nx = cell.lo[d] + step;
      cell.hi[d] = std::min(bb.hi[d], nx);
    }
    ConvexPoly cut = body.poly.intersect(cell);
    if (!cut.empty() && cut.dim() == n) {
      Rat vol = cut.volume();
      if (vol > 0) {
        RatVec mid(n);
        for (int d = 0; d < n; ++d) mid[d] = (cell.lo[d] + cell.hi[d]) / 2;
        RatVec sample;
        if (scheme == BodySampleScheme::lattice && body.poly.contains(mid, true) &&
            cell.hi == add(cell.lo, RatVec(n, step))) {
          sample = mid;  // uncut cell: midpoint
        } else {
          sample = cut.centroid();
        }
        bm.pts_exact_.push_back(sample);
        bm.pts_.push_back(ratvec_d(sample));
        weights_exact.push_back(vol);
        total += vol;
      }
    }
    int d = n - 1;
    while (d >= 0 && ++idx[d] == cells[d]) idx[d--] = 0;
    if (d < 0) break;
  }
  if (total == 0) throw Error(ErrorCode::zero_mass, "body has no volume at this resolution");
  double s = 0;
  for (const auto& w : weights_exact) s += rat_d(w / total);
  for (const auto& w : weights_exact) bm.w_.push_back(rat_d(w / total) / s);
  // Strict interiority of every sample.
  for (const auto& p : bm.pts_exact_)
    if (!body.poly.contains(p, true))
      throw Error(ErrorCode::internal, "body sample is not strictly interior");
  return bm;
}

}  // namespace skelot
