#include "skelot/tropical.hpp"

#include <algorithm>
#include <cmath>

#include "skelot/error.hpp"

namespace skelot {

namespace {

Rat term_value(const MonomialTerm& t, const RatVec& x) {
  Rat v = -t.a;
  for (size_t i = 0; i < x.size(); ++i) v += rat_ll(t.p[i]) * x[i];
  return v;
}

double term_value_d(const MonomialTerm& t, const std::vector<double>& x) {
  double v = -rat_d(t.a);
  for (size_t i = 0; i < x.size(); ++i) v += static_cast<double>(t.p[i]) * x[i];
  return v;
}

/// Deduplicate by gradient, keeping the smallest shift (it dominates).
void dedup_terms(std::vector<MonomialTerm>& terms) {
  std::sort(terms.begin(), terms.end(), [](const MonomialTerm& a, const MonomialTerm& b) {
    if (a.p != b.p) return a.p < b.p;
    return a.a < b.a;
  });
  std::vector<MonomialTerm> out;
  for (auto& t : terms) {
    if (!out.empty() && out.back().p == t.p) continue;
    out.push_back(std::move(t));
  }
  terms = std::move(out);
}

}  // namespace

const std::vector<MonomialTerm>* TropicalSection::terms_on(const Skeleton& sk, int face) const {
  auto it = terms.find(sk.face(face).id);
  return it == terms.end() ? nullptr : &it->second;
}

Rat TropicalSection::eval_exact(const Skeleton& sk, const SkeletonPoint& x) const {
  const auto* ts = terms_on(sk, x.face);
  if (!ts || ts->empty())
    throw Error(ErrorCode::face_missing,
                "section '" + label + "' has no terms on face '" + sk.face(x.face).id + "'");
  Rat best = term_value((*ts)[0], x.coords);
  for (size_t i = 1; i < ts->size(); ++i) best = std::max(best, term_value((*ts)[i], x.coords));
  return best;
}

double TropicalSection::eval(const Skeleton& sk, int face, const std::vector<double>& x) const {
  const auto* ts = terms_on(sk, face);
  if (!ts || ts->empty())
    throw Error(ErrorCode::face_missing,
                "section '" + label + "' has no terms on face '" + sk.face(face).id + "'");
  double best = term_value_d((*ts)[0], x);
  for (size_t i = 1; i < ts->size(); ++i) best = std::max(best, term_value_d((*ts)[i], x));
  return best;
}

std::set<std::vector<long long>> TropicalSection::gradients_at(const Skeleton& sk,
                                                               const SkeletonPoint& y) const {
  const auto* ts = terms_on(sk, y.face);
  if (!ts || ts->empty())
    throw Error(ErrorCode::face_missing, "section '" + label + "' missing on anchor face");
  Rat best = term_value((*ts)[0], y.coords);
  for (size_t i = 1; i < ts->size(); ++i) best = std::max(best, term_value((*ts)[i], y.coords));
  std::set<std::vector<long long>> grads;
  for (const auto& t : *ts)
    if (term_value(t, y.coords) == best) grads.insert(t.p);
  return grads;
}

std::vector<Rat> TropicalSection::breakpoints_1d(const Skeleton& sk, int face) const {
  const auto* ts = terms_on(sk, face);
  if (!ts) return {};
  const Box bb = sk.face(face).chart.bounding_box();
  const Rat lo = bb.lo[0], hi = bb.hi[0];
  std::vector<Rat> pts;
  for (size_t i = 0; i < ts->size(); ++i) {
    for (size_t j = i + 1; j < ts->size(); ++j) {
      const auto& t = (*ts)[i];
      const auto& u = (*ts)[j];
      if (t.p[0] == u.p[0]) continue;
      Rat x = (t.a - u.a) / rat_ll(t.p[0] - u.p[0]);
      if (x <= lo || x >= hi) continue;
      // Keep only ties realised on the envelope.
      SkeletonPoint sp{face, {x}};
      if (term_value(t, sp.coords) == eval_exact(sk, sp)) pts.push_back(x);
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

void TropicalSection::prune(const Skeleton& sk) {
  if (sk.n() > 2) return;  // exact pruning is defined for n <= 2 charts
  for (auto& [fid, ts] : terms) {
    dedup_terms(ts);
    const ConvexPoly& chart = sk.face(sk.face_index(fid)).chart;
    std::vector<MonomialTerm> kept;
    for (size_t i = 0; i < ts.size(); ++i) {
      ConvexPoly region = chart;
      for (size_t j = 0; j < ts.size() && !region.empty(); ++j) {
        if (j == i) continue;
        // value_i >= value_j  <=>  <p_j - p_i, x> <= a_j - a_i
        RatVec a(ts[i].p.size());
        for (size_t d = 0; d < a.size(); ++d) a[d] = rat_ll(ts[j].p[d] - ts[i].p[d]);
        region = region.clip(a, ts[j].a - ts[i].a);
      }
      if (!region.empty()) kept.push_back(ts[i]);
    }
    ts = std::move(kept);
  }
}

nlohmann::json TropicalSection::to_json() const {
  nlohmann::json doc;
  doc["label"] = label;
  doc["degree"] = degree;
  nlohmann::json faces;
  for (const auto& [fid, ts] : terms) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& t : ts) {
      nlohmann::json jt;
      jt["p"] = t.p;
      jt["a"] = rat_str(t.a);
      arr.push_back(jt);
    }
    faces[fid] = arr;
  }
  doc["faces"] = faces;
  if (!twists.empty()) {
    nlohmann::json tw = nlohmann::json::array();
    for (const auto& [gi, t] : twists) {
      nlohmann::json jt;
      jt["gluing"] = gi;
      jt["dp"] = t.dp;
      jt["da"] = rat_str(t.da);
      tw.push_back(jt);
    }
    doc["twists"] = tw;
  }
  return doc;
}

TropicalSection TropicalSection::from_json(const nlohmann::json& doc) {
  TropicalSection s;
  try {
    s.label = doc.at("label").get<std::string>();
    if (doc.contains("degree")) s.degree = doc.at("degree").get<int>();
    for (const auto& [fid, arr] : doc.at("faces").items()) {
      std::vector<MonomialTerm> ts;
      for (const auto& jt : arr) {
        MonomialTerm t;
        t.p = jt.at("p").get<std::vector<long long>>();
        t.a = rat_parse(jt.at("a").get<std::string>());
        ts.push_back(std::move(t));
      }
      if (ts.empty())
        throw Error(ErrorCode::malformed_input, "empty term list on face '" + fid + "'");
      s.terms[fid] = std::move(ts);
    }
    if (doc.contains("twists")) {
      for (const auto& jt : doc.at("twists")) {
        GluingTwist t;
        t.dp = jt.at("dp").get<std::vector<long long>>();
        t.da = rat_parse(jt.at("da").get<std::string>());
        s.twists[jt.at("gluing").get<int>()] = std::move(t);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::malformed_input, e.what());
  }
  return s;
}

TropicalSection multiply_sections(const Skeleton& sk, const TropicalSection& s1,
                                  const TropicalSection& s2) {
  if (s1.terms.size() != s2.terms.size())
    throw Error(ErrorCode::face_mismatch, "factors live on different face sets");
  for (const auto& [fid, _] : s1.terms)
    if (!s2.terms.count(fid))
      throw Error(ErrorCode::face_mismatch, "factor missing terms on face '" + fid + "'");

  TropicalSection out;
  out.degree = s1.degree + s2.degree;
  out.label = s1.label + "*" + s2.label;
  for (const auto& [fid, t1] : s1.terms) {
    const auto& t2 = s2.terms.at(fid);
    std::vector<MonomialTerm> ts;
    ts.reserve(t1.size() * t2.size());
    for (const auto& a : t1) {
      for (const auto& b : t2) {
        MonomialTerm t;
        t.p.resize(a.p.size());
        for (size_t d = 0; d < a.p.size(); ++d) t.p[d] = a.p[d] + b.p[d];
        t.a = a.a + b.a;
        ts.push_back(std::move(t));
      }
    }
    dedup_terms(ts);
    out.terms[fid] = std::move(ts);
  }
  for (const auto& [gi, t1] : s1.twists) {
    auto it = s2.twists.find(gi);
    if (it == s2.twists.end()) continue;
    GluingTwist t;
    t.dp.resize(t1.dp.size());
    for (size_t d = 0; d < t1.dp.size(); ++d) t.dp[d] = t1.dp[d] + it->second.dp[d];
    t.da = t1.da + it->second.da;
    out.twists[gi] = std::move(t);
  }
  out.prune(sk);
  return out;
}

nlohmann::json DegreeBasis::to_json() const {
  nlohmann::json doc;
  doc["degree"] = degree;
  doc["sections"] = nlohmann::json::array();
  for (const auto& s : sections) doc["sections"].push_back(s.to_json());
  return doc;
}

DegreeBasis DegreeBasis::from_json(const nlohmann::json& doc) {
  DegreeBasis b;
  try {
    b.degree = doc.at("degree").get<int>();
    for (const auto& js : doc.at("sections")) {
      TropicalSection s = TropicalSection::from_json(js);
      s.degree = b.degree;
      b.sections.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::malformed_input, e.what());
  }
  return b;
}

namespace {

/// All envelope-realised tie loci of one section on one top face.
/// 1-D: wall points. 2-D: wall segments plus their carrier lines.
struct FaceWalls {
  std::vector<Rat> points;                             // 1-D
  std::vector<std::pair<RatVec, Rat>> lines;           // 2-D carrier {normal, offset}
  std::vector<Wall> walls;
};

FaceWalls section_walls(const Skeleton& sk, const TropicalSection& s, int face) {
  FaceWalls out;
  const auto* ts = s.terms_on(sk, face);
  if (!ts) return out;
  const ConvexPoly& chart = sk.face(face).chart;
  if (sk.n() == 1) {
    for (const Rat& x : s.breakpoints_1d(sk, face)) {
      out.points.push_back(x);
      Wall w;
      w.face = face;
      w.normal = {Rat(1)};
      w.offset = x;
      w.piece = ConvexPoly::hull(1, {{x}});
      out.walls.push_back(std::move(w));
    }
    return out;
  }
  for (size_t i = 0; i < ts->size(); ++i) {
    for (size_t j = i + 1; j < ts->size(); ++j) {
      const auto& t = (*ts)[i];
      const auto& u = (*ts)[j];
      if (t.p == u.p) continue;
      RatVec normal(2);
      normal[0] = rat_ll(t.p[0] - u.p[0]);
      normal[1] = rat_ll(t.p[1] - u.p[1]);
      Rat offset = t.a - u.a;
      // Tie locus clipped to where both terms win the envelope.
      ConvexPoly region = chart.clip(normal, offset);
      RatVec neg = {-normal[0], -normal[1]};
      region = region.clip(neg, -offset);
      for (size_t k = 0; k < ts->size() && !region.empty(); ++k) {
        if (k == i || k == j) continue;
        RatVec a(2);
        a[0] = rat_ll((*ts)[k].p[0] - t.p[0]);
        a[1] = rat_ll((*ts)[k].p[1] - t.p[1]);
        region = region.clip(a, (*ts)[k].a - t.a);
      }
      if (region.empty() || region.dim() < 1) continue;
      Wall w;
      w.face = face;
      w.normal = normal;
      w.offset = offset;
      w.piece = region;
      out.walls.push_back(w);
      out.lines.push_back({normal, offset});
    }
  }
  return out;
}

}  // namespace

WallComplex wall_complex(const Skeleton& sk, const DegreeBasis& basis) {
  if (basis.sections.empty())
    throw Error(ErrorCode::malformed_input, "wall complex of an empty basis");
  WallComplex wc;
  wc.degree = basis.degree;

  // Deterministic face order: by id.
  std::vector<int> tops = sk.top_faces();
  std::sort(tops.begin(), tops.end(),
            [&](int a, int b) { return sk.face(a).id < sk.face(b).id; });

  for (int face : tops) {
    if (sk.n() == 1) {
      std::vector<Rat> pts;
      for (const auto& s : basis.sections) {
        FaceWalls fw = section_walls(sk, s, face);
        for (auto& w : fw.walls) wc.walls.push_back(std::move(w));
        pts.insert(pts.end(), fw.points.begin(), fw.points.end());
      }
      std::sort(pts.begin(), pts.end());
      pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
      const Box bb = sk.face(face).chart.bounding_box();
      std::vector<Rat> cuts = {bb.lo[0]};
      cuts.insert(cuts.end(), pts.begin(), pts.end());
      cuts.push_back(bb.hi[0]);
      for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (cuts[i] == cuts[i + 1]) continue;
        Chamber ch;
        ch.face = face;
        ch.poly = ConvexPoly::hull(1, {{cuts[i]}, {cuts[i + 1]}});
        ch.rep = {(cuts[i] + cuts[i + 1]) / 2};
        wc.chambers.push_back(std::move(ch));
      }
      continue;
    }

    // 2-D: collect active wall lines, then split the chart recursively.
    std::vector<std::pair<RatVec, Rat>> lines;
    for (const auto& s : basis.sections) {
      FaceWalls fw = section_walls(sk, s, face);
      for (auto& w : fw.walls) wc.walls.push_back(std::move(w));
      lines.insert(lines.end(), fw.lines.begin(), fw.lines.end());
    }
    // Deduplicate carrier lines up to scaling.
    std::sort(lines.begin(), lines.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return a.second < b.second;
    });
    std::vector<std::pair<RatVec, Rat>> uniq;
    for (const auto& ln : lines) {
      bool dup = false;
      for (const auto& u : uniq) {
        // parallel and same offset ratio
        Rat cr = ln.first[0] * u.first[1] - ln.first[1] * u.first[0];
        if (cr != 0) continue;
        Rat s1 = (u.first[0] != 0) ? ln.first[0] / u.first[0] : ln.first[1] / u.first[1];
        if (ln.second == s1 * u.second) {
          dup = true;
          break;
        }
      }
      if (!dup) uniq.push_back(ln);
    }
    std::vector<ConvexPoly> pieces = {sk.face(face).chart};
    for (const auto& [normal, offset] : uniq) {
      std::vector<ConvexPoly> next;
      RatVec neg = {-normal[0], -normal[1]};
      for (const auto& pc : pieces) {
        ConvexPoly below = pc.clip(normal, offset);
        ConvexPoly above = pc.clip(neg, -offset);
        if (!below.empty() && below.dim() == 2) next.push_back(below);
        if (!above.empty() && above.dim() == 2) next.push_back(above);
      }
      pieces = std::move(next);
    }
    std::sort(pieces.begin(), pieces.end(), [](const ConvexPoly& a, const ConvexPoly& b) {
      return a.centroid() < b.centroid();
    });
    for (auto& pc : pieces) {
      Chamber ch;
      ch.face = face;
      ch.rep = pc.centroid();
      ch.poly = std::move(pc);
      wc.chambers.push_back(std::move(ch));
    }
  }
  return wc;
}

IndependenceVerdict check_valuative_independence(const Skeleton& sk, DegreeBasis& basis) {
  WallComplex wc = wall_complex(sk, basis);
  IndependenceVerdict v;
  v.chambers_checked = static_cast<int>(wc.chambers.size());
  for (size_t ci = 0; ci < wc.chambers.size(); ++ci) {
    const Chamber& ch = wc.chambers[ci];
    std::map<std::vector<long long>, std::string> seen;
    for (const auto& s : basis.sections) {
      auto grads = s.gradients_at(sk, SkeletonPoint{ch.face, ch.rep});
      // Representatives are interior to the chamber, hence off every
      // corner locus; the argmax gradient is unique there.
      const std::vector<long long>& g = *grads.begin();
      auto [it, fresh] = seen.emplace(g, s.label);
      if (!fresh) {
        v.valid = false;
        v.counterexample =
            IndependenceCounterexample{static_cast<int>(ci), it->second, s.label, g};
        return v;
      }
    }
  }
  v.valid = true;
  basis.validated = true;
  return v;
}

void validate_sections(const Skeleton& sk, const DegreeBasis& basis) {
  for (const auto& s : basis.sections) {
    if (s.degree != basis.degree)
      throw Error(ErrorCode::degree_mismatch,
                  "section '" + s.label + "' degree disagrees with basis");
    for (int face : sk.top_faces())
      if (!s.terms_on(sk, face))
        throw Error(ErrorCode::face_missing,
                    "section '" + s.label + "' missing on face '" + sk.face(face).id + "'");
    // Continuity modulo twists across every gluing.
    for (size_t gi = 0; gi < sk.gluings().size(); ++gi) {
      for (const auto& [xp, yp] : sk.gluing_samples(static_cast<int>(gi))) {
        Rat lhs = s.eval_exact(sk, xp);
        Rat rhs = s.eval_exact(sk, yp);
        auto it = s.twists.find(static_cast<int>(gi));
        if (it != s.twists.end()) {
          for (size_t d = 0; d < yp.coords.size(); ++d)
            rhs += rat_ll(it->second.dp[d]) * yp.coords[d];
          rhs -= it->second.da;
        }
        if (lhs != rhs)
          throw Error(ErrorCode::malformed_input,
                      "section '" + s.label + "' discontinuous across gluing " +
                          std::to_string(gi));
      }
    }
    // Agreement on overlaps of distinct charts (shared boundary points).
    if (sk.n() <= 2) {
      for (int fa : sk.top_faces()) {
        for (int fb : sk.top_faces()) {
          if (fa >= fb) continue;
          for (const auto& va : sk.face(fa).vertices) {
            if (!sk.face(fb).chart.contains(va)) continue;
            Rat lhs = s.eval_exact(sk, SkeletonPoint{fa, va});
            Rat rhs = s.eval_exact(sk, SkeletonPoint{fb, va});
            if (lhs != rhs)
              throw Error(ErrorCode::malformed_input,
                          "section '" + s.label + "' disagrees where faces '" +
                              sk.face(fa).id + "' and '" + sk.face(fb).id + "' meet");
          }
        }
      }
    }
  }
}

bool is_sufficiently_irrational(const Skeleton& sk, const SkeletonPoint& y,
                                const BasisFamily& family, int l_max) {
  if (sk.n() <= 2 && !sk.face(y.face).chart.contains(y.coords, true)) return false;
  for (const auto& [l, basis] : family) {
    if (l > l_max) continue;
    for (const auto& s : basis.sections)
      if (s.gradients_at(sk, y).size() > 1) return false;
  }
  return true;
}

double lipschitz_constant(const BasisFamily& family) {
  if (family.empty()) throw Error(ErrorCode::malformed_input, "empty basis family");
  double best = 0;
  for (const auto& [l, basis] : family) {
    for (const auto& s : basis.sections) {
      long long m = 0;
      for (const auto& [fid, ts] : s.terms)
        for (const auto& t : ts)
          for (long long c : t.p) m = std::max(m, std::llabs(c));
      best = std::max(best, static_cast<double>(m) / l);
    }
  }
  return best;
}

}  // namespace skelot
