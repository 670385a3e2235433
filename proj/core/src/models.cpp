#include "skelot/models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "skelot/error.hpp"
#include "skelot/random.hpp"

namespace skelot {

std::vector<int> default_degrees(int l_max) {
  std::vector<int> ds;
  for (int l = 1; l <= std::min(12, l_max); ++l) ds.push_back(l);
  for (int l = 16; l <= l_max; l *= 2) ds.push_back(l);
  return ds;
}

namespace {

Skeleton segment_skeleton(bool glued) {
  nlohmann::json doc;
  doc["n"] = 1;
  doc["faces"] = {{{"id", "seg"}, {"vertices", {{"0"}, {"1"}}}},
                  {{"id", "v0"}, {"vertices", {{"0"}}}},
                  {{"id", "v1"}, {"vertices", {{"1"}}}}};
  if (glued) {
    doc["gluings"] = {{{"from", "seg"}, {"to", "seg"}, {"linear", {{1}}}, {"translate", {"-1"}}}};
  } else {
    doc["gluings"] = nlohmann::json::array();
  }
  return Skeleton::build(doc);
}

Skeleton box_skeleton(int n, const std::vector<Gluing>& extra_gluings) {
  nlohmann::json doc;
  doc["n"] = n;
  nlohmann::json verts = nlohmann::json::array();
  for (int mask = 0; mask < (1 << n); ++mask) {
    std::vector<std::string> v;
    for (int d = 0; d < n; ++d) v.push_back((mask >> d) & 1 ? "1" : "0");
    verts.push_back(v);
  }
  doc["faces"] = {{{"id", "cube"}, {"vertices", verts}}};
  doc["gluings"] = nlohmann::json::array();
  Skeleton sk = Skeleton::build(doc);
  (void)extra_gluings;
  return sk;
}

/// Monomial model: single-term sections with gradients {0..l}^n, shift 0.
BasisFamily monomial_bases(int n, const std::string& face_id, const std::vector<int>& degrees) {
  BasisFamily fam;
  for (int l : degrees) {
    DegreeBasis b;
    b.degree = l;
    std::vector<std::vector<long long>> grads;
    std::vector<long long> g(n, 0);
    while (true) {
      grads.push_back(g);
      int d = n - 1;
      while (d >= 0 && ++g[d] > l) g[d--] = 0;
      if (d < 0) break;
    }
    for (const auto& gr : grads) {
      TropicalSection s;
      s.degree = l;
      std::ostringstream lab;
      lab << "m";
      for (long long c : gr) lab << "_" << c;
      s.label = lab.str();
      s.terms[face_id] = {MonomialTerm{gr, Rat(0)}};
      b.sections.push_back(std::move(s));
    }
    fam[l] = std::move(b);
  }
  return fam;
}

/// Circle-model sections at degree l: section j has terms with gradient -m
/// and shift q m^2 / l over m ≡ j (mod l), windowed so that dropped terms
/// are strictly dominated everywhere on the chart.
std::vector<MonomialTerm> tate_terms(int j, int l, const Rat& q, const Rat& margin,
                                     long long window_scale) {
  // Any envelope value on [0,1] is at least -q l / 4; a term with
  // max-value below that minus the margin cannot contribute.
  const Rat floor_bound = -q * l / 4 - margin;
  auto keep = [&](long long m) {
    Rat v = -q * rat_ll(m) * rat_ll(m) / l;  // value at x = 0
    if (m < 0) v += rat_ll(-m);              // value at x = 1 is -q m^2/l - m
    return v >= floor_bound;
  };
  std::vector<MonomialTerm> ts;
  auto push = [&](long long m) {
    ts.push_back(MonomialTerm{{-m}, q * rat_ll(m) * rat_ll(m) / l});
  };
  for (long long m = j;; m += l) {
    if (!keep(m) && m > window_scale * l) break;
    if (keep(m)) push(m);
  }
  for (long long m = j - l;; m -= l) {
    if (!keep(m) && m < -window_scale * l) break;
    if (keep(m)) push(m);
  }
  std::sort(ts.begin(), ts.end(),
            [](const MonomialTerm& a, const MonomialTerm& b) { return a.p < b.p; });
  return ts;
}

BasisFamily tate_bases(const Skeleton& sk, const Rat& q, const Rat& margin,
                       const std::vector<int>& degrees) {
  // q = 1/(2k) keeps the deck twist a self-map of each section.
  Rat inv = 1 / (2 * q);
  if (inv.get_den() != 1 || inv <= 0)
    throw Error(ErrorCode::malformed_input,
                "tate_circle parameter must be of the form 1/(2k), got q=" + rat_str(q));
  const long long k = inv.get_num().get_si();

  BasisFamily fam;
  for (int l : degrees) {
    DegreeBasis b;
    b.degree = l;
    const long long T = k * l;  // deck translation in index space
    for (int j = 0; j < l; ++j) {
      TropicalSection s;
      s.degree = l;
      s.label = "t" + std::to_string(j);
      s.terms["seg"] = tate_terms(j, l, q, margin, 4);
      // Window certificate: doubling the window must not change the
      // contributing set.
      {
        TropicalSection wide = s;
        wide.terms["seg"] = tate_terms(j, l, q, margin * 2 + rat_ll(l), 8);
        TropicalSection narrow = s;
        narrow.prune(sk);
        wide.prune(sk);
        const auto& nt = narrow.terms["seg"];
        const auto& wt = wide.terms["seg"];
        bool same = nt.size() == wt.size();
        for (size_t i = 0; same && i < nt.size(); ++i)
          same = nt[i].p == wt[i].p && nt[i].a == wt[i].a;
        if (!same) throw Error(ErrorCode::internal, "term window certification failed");
        s = std::move(narrow);
        s.label = "t" + std::to_string(j);
      }
      s.twists[0] = GluingTwist{{T}, -rat_ll(T) / 2};
      b.sections.push_back(std::move(s));
    }
    fam[l] = std::move(b);
  }
  return fam;
}

struct RandomFamilyResult {
  BasisFamily fam;
  ConvexPoly base_polytope;
};

/// Random valid basis family. Gradients per degree are all lattice points
/// of l * P for a seeded lattice polytope P, so the family is complete and
/// multiplicatively coherent; shifts are small random rationals. Multi-term
/// sections add extra in-lattice terms and may fail the chamber criterion,
/// in which case the shifts are redrawn.
RandomFamilyResult random_bases(const Skeleton& sk, int n, int l_max, uint64_t seed,
                                long long term_budget, bool single_term) {
  Rng rng(seed);
  // Seeded lattice polytope P with nonempty interior.
  std::vector<RatVec> pts;
  if (n == 1) {
    long long lo = rng.integer(-1, 0);
    long long hi = rng.integer(1, 2);
    pts = {{rat_ll(lo)}, {rat_ll(hi)}};
  } else {
    while (true) {
      pts.clear();
      int m = static_cast<int>(rng.integer(3, 5));
      for (int i = 0; i < m; ++i)
        pts.push_back({rat_ll(rng.integer(0, 3)), rat_ll(rng.integer(0, 3))});
      if (ConvexPoly::hull(2, pts).dim() == 2) break;
    }
  }
  ConvexPoly P = ConvexPoly::hull(n, pts);

  auto lattice_points = [&](int l) {
    std::vector<std::vector<long long>> out;
    Box bb = P.bounding_box();
    if (n == 1) {
      long long lo = static_cast<long long>(std::ceil(rat_d(bb.lo[0]) * l - 0.5));
      long long hi = static_cast<long long>(std::floor(rat_d(bb.hi[0]) * l + 0.5));
      for (long long v = lo; v <= hi; ++v)
        if (P.contains({rat_frac(v, l)})) out.push_back({v});
    } else {
      long long xlo = static_cast<long long>(std::floor(rat_d(bb.lo[0]) * l));
      long long xhi = static_cast<long long>(std::ceil(rat_d(bb.hi[0]) * l));
      long long ylo = static_cast<long long>(std::floor(rat_d(bb.lo[1]) * l));
      long long yhi = static_cast<long long>(std::ceil(rat_d(bb.hi[1]) * l));
      for (long long x = xlo; x <= xhi; ++x)
        for (long long y = ylo; y <= yhi; ++y)
          if (P.contains({rat_frac(x, l), rat_frac(y, l)}))
            out.push_back({x, y});
    }
    return out;
  };

  const std::string fid = sk.face(sk.top_faces()[0]).id;
  // Extra-term gradients live in a band offset beyond the leading lattice,
  // so an extra that wins a chamber rarely reproduces another section's
  // leading gradient there; residual collisions trigger a redraw.
  Box pbb = P.bounding_box();
  const long long band = static_cast<long long>(std::ceil(rat_d(pbb.hi[0] - pbb.lo[0]))) + 2;

  long long attempts_left = std::max<long long>(1, term_budget / 100);
  while (true) {
    BasisFamily fam;
    bool all_valid = true;
    for (int l = 1; l <= l_max; ++l) {
      DegreeBasis b;
      b.degree = l;
      auto grads = lattice_points(l);
      for (size_t gi = 0; gi < grads.size(); ++gi) {
        TropicalSection s;
        s.degree = l;
        s.label = "r" + std::to_string(l) + "_" + std::to_string(gi);
        std::vector<MonomialTerm> ts = {MonomialTerm{grads[gi], rng.rational(0, 4, 8)}};
        if (!single_term && grads.size() > 1 && rng.uniform() < 0.5) {
          // Offset by a constant band, so the extra gradients stay pairwise
          // distinct and clear of every leading gradient even where they
          // win; the chamber check below still audits the result.
          std::vector<long long> g2 = grads[gi];
          const long long B = l * band;
          g2[0] += B;
          // Wins on a pocket x_0 > theta near the chart edge.
          Rat theta = rat_frac(rng.integer(14, 19), 20);
          ts.push_back(MonomialTerm{g2, ts[0].a + rat_ll(B) * theta});
        }
        s.terms[fid] = std::move(ts);
        b.sections.push_back(std::move(s));
      }
      IndependenceVerdict v = check_valuative_independence(sk, b);
      if (!v.valid) {
        all_valid = false;
        break;
      }
      fam[l] = std::move(b);
    }
    if (all_valid) return {std::move(fam), std::move(P)};
    if (--attempts_left <= 0)
      throw Error(ErrorCode::generation_failed,
                  "random basis generation exhausted its budget; reseed");
  }
}

void combine_product(Model& out, const std::vector<Model>& comps, const std::vector<int>& degrees) {
  const int n = static_cast<int>(comps.size());
  // Product chart [0,1]^n with one gluing per circle component.
  nlohmann::json doc;
  doc["n"] = n;
  nlohmann::json verts = nlohmann::json::array();
  for (int mask = 0; mask < (1 << n); ++mask) {
    std::vector<std::string> v;
    for (int d = 0; d < n; ++d) v.push_back((mask >> d) & 1 ? "1" : "0");
    verts.push_back(v);
  }
  doc["faces"] = {{{"id", "cube"}, {"vertices", verts}}};
  doc["gluings"] = nlohmann::json::array();
  std::vector<int> gluing_of_comp(n, -1);
  int gi = 0;
  for (int d = 0; d < n; ++d) {
    if (comps[d].skeleton.gluings().empty()) continue;
    nlohmann::json g;
    g["from"] = "cube";
    g["to"] = "cube";
    std::vector<std::vector<long long>> lin(n, std::vector<long long>(n, 0));
    for (int i = 0; i < n; ++i) lin[i][i] = 1;
    g["linear"] = lin;
    std::vector<std::string> tr(n, "0");
    tr[d] = "-1";
    g["translate"] = tr;
    doc["gluings"].push_back(g);
    gluing_of_comp[d] = gi++;
  }
  out.skeleton = Skeleton::build(doc);

  for (int l : degrees) {
    DegreeBasis b;
    b.degree = l;
    // All tuples of component sections of the same degree.
    std::vector<size_t> idx(n, 0);
    std::vector<const DegreeBasis*> cb(n);
    for (int d = 0; d < n; ++d) {
      auto it = comps[d].bases.find(l);
      if (it == comps[d].bases.end())
        throw Error(ErrorCode::internal, "component missing degree " + std::to_string(l));
      cb[d] = &it->second;
    }
    while (true) {
      TropicalSection s;
      s.degree = l;
      std::string lab = "p";
      std::vector<MonomialTerm> ts = {MonomialTerm{{}, Rat(0)}};
      for (int d = 0; d < n; ++d) {
        const TropicalSection& cs = cb[d]->sections[idx[d]];
        lab += "_" + cs.label;
        const auto& comp_terms = cs.terms.begin()->second;
        std::vector<MonomialTerm> next;
        next.reserve(ts.size() * comp_terms.size());
        for (const auto& t0 : ts) {
          for (const auto& ct : comp_terms) {
            MonomialTerm t = t0;
            t.p.push_back(ct.p[0]);
            t.a += ct.a;
            next.push_back(std::move(t));
          }
        }
        ts = std::move(next);
        // Component twist lifts to the product gluing on coordinate d.
        if (gluing_of_comp[d] >= 0 && !cs.twists.empty()) {
          const GluingTwist& ct = cs.twists.begin()->second;
          GluingTwist t;
          t.dp.assign(n, 0);
          t.dp[d] = ct.dp[0];
          t.da = ct.da;
          s.twists[gluing_of_comp[d]] = std::move(t);
        }
      }
      s.label = lab;
      s.terms["cube"] = std::move(ts);
      if (out.skeleton.n() <= 2) s.prune(out.skeleton);
      b.sections.push_back(std::move(s));
      int d = n - 1;
      while (d >= 0 && ++idx[d] == cb[d]->sections.size()) idx[d--] = 0;
      if (d < 0) break;
    }
    b.validated = true;
    out.bases[l] = std::move(b);
  }

  out.Ln = 1;
  Rat fact = 1;
  for (int i = 2; i <= n; ++i) fact *= i;
  Rat volume = 1;
  for (const auto& c : comps) {
    Rat cf = 1;  // component volume = Ln of a 1-D model
    volume *= c.Ln / cf;
  }
  out.Ln = volume * fact;

  CostForm cf;
  for (const auto& c : comps) {
    cf.comp.push_back(c.closed_form->comp[0]);
    cf.q.push_back(c.closed_form->q[0]);
  }
  out.closed_form = cf;
}

}  // namespace

Model instantiate(const ModelSpec& spec) {
  Model m;
  m.seed = spec.seed;
  m.degrees = default_degrees(spec.l_max);
  switch (spec.kind) {
    case ModelSpec::Kind::monomial: {
      if (spec.n < 1 || spec.n > 2)
        throw Error(ErrorCode::malformed_input, "monomial model supports n in {1,2}");
      Rat fact = 1;
      for (int i = 2; i <= spec.n; ++i) fact *= i;
      if (spec.Ln != fact)
        throw Error(ErrorCode::malformed_input,
                    "monomial(n, Ln) requires Ln = n!; got " + rat_str(spec.Ln));
      m.name = "monomial" + std::to_string(spec.n);
      m.skeleton = spec.n == 1 ? segment_skeleton(false) : box_skeleton(spec.n, {});
      const std::string fid = m.skeleton.face(m.skeleton.top_faces()[0]).id;
      m.bases = monomial_bases(spec.n, fid, m.degrees);
      m.Ln = spec.Ln;
      CostForm cf;
      cf.comp.assign(spec.n, CostForm::Comp::affine);
      cf.q.assign(spec.n, Rat(0));
      m.closed_form = cf;
      break;
    }
    case ModelSpec::Kind::tate_circle: {
      m.name = "tate-circle(q=" + rat_str(spec.q) + ")";
      m.skeleton = segment_skeleton(true);
      m.bases = tate_bases(m.skeleton, spec.q, spec.window_margin, m.degrees);
      m.Ln = 1;
      CostForm cf;
      cf.comp = {CostForm::Comp::circle};
      cf.q = {spec.q};
      m.closed_form = cf;
      break;
    }
    case ModelSpec::Kind::torus_product: {
      if (spec.components.empty())
        throw Error(ErrorCode::malformed_input, "torus_product needs components");
      std::vector<Model> comps;
      for (auto cspec : spec.components) {
        if (cspec.n != 1)
          throw Error(ErrorCode::malformed_input, "torus_product components must be 1-D");
        cspec.l_max = spec.l_max;
        comps.push_back(instantiate(cspec));
      }
      m.name = "product[" + std::to_string(comps.size()) + "]";
      combine_product(m, comps, m.degrees);
      break;
    }
    case ModelSpec::Kind::random_basis: {
      if (spec.n < 1 || spec.n > 2)
        throw Error(ErrorCode::malformed_input, "random model supports n in {1,2}");
      m.name = "random" + std::to_string(spec.n) + "(seed=" + std::to_string(spec.seed) + ")";
      m.skeleton = spec.n == 1 ? segment_skeleton(false) : box_skeleton(spec.n, {});
      m.degrees.clear();
      for (int l = 1; l <= spec.l_max; ++l) m.degrees.push_back(l);
      auto res =
          random_bases(m.skeleton, spec.n, spec.l_max, spec.seed, spec.term_budget, spec.single_term);
      m.bases = std::move(res.fam);
      // N(l)/l^n tends to Vol(P); the intersection number follows.
      Rat fact = 1;
      for (int i = 2; i <= spec.n; ++i) fact *= i;
      m.Ln = res.base_polytope.volume() * fact;
      if (spec.single_term) {
        CostForm cf;
        cf.comp.assign(spec.n, CostForm::Comp::affine);
        cf.q.assign(spec.n, Rat(0));
        m.closed_form = cf;
      }
      break;
    }
  }
  // Every shipped basis must pass the independence criterion.
  for (auto& [l, b] : m.bases) {
    if (b.validated) continue;
    validate_sections(m.skeleton, b);
    IndependenceVerdict v = check_valuative_independence(m.skeleton, b);
    if (!v.valid)
      throw Error(ErrorCode::generation_failed,
                  "degree " + std::to_string(l) + " basis failed validation");
  }
  return m;
}

SkeletonPoint Model::default_anchor(int l_max) const {
  const int face = skeleton.top_faces()[0];
  const int n = skeleton.n();
  // March a deterministic candidate list until the wall test passes.
  for (long long k = 0; k < 2000; ++k) {
    RatVec y(n);
    y[0] = rat_frac(137 + 7 * k, 1000 + k);
    if (n > 1) y[1] = rat_frac(241 + 11 * k, 1000 + k);
    SkeletonPoint p{face, y};
    if (!skeleton.face(face).chart.contains(y, true)) continue;
    if (is_sufficiently_irrational(skeleton, p, bases, l_max)) return p;
  }
  throw Error(ErrorCode::non_unique_gradient, "no wall-free anchor found");
}

namespace {

std::vector<std::string> split_args(const std::string& body) {
  std::vector<std::string> parts;
  int depth = 0;
  std::string cur;
  for (char c : body) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) parts.push_back(cur);
  return parts;
}

}  // namespace

ModelSpec ModelSpec::parse(const std::string& text) {
  std::string t;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) t.push_back(c);
  auto open = t.find('(');
  if (open == std::string::npos || t.back() != ')')
    throw Error(ErrorCode::malformed_input, "model spec must look like kind(args): " + text);
  std::string kind = t.substr(0, open);
  std::vector<std::string> args = split_args(t.substr(open + 1, t.size() - open - 2));

  ModelSpec ms;
  std::vector<std::string> plain;
  for (const auto& a : args) {
    if (a.rfind("lmax=", 0) == 0)
      ms.l_max = std::stoi(a.substr(5));
    else if (a.rfind("seed=", 0) == 0)
      ms.seed = std::stoull(a.substr(5));
    else
      plain.push_back(a);
  }
  if (kind == "monomial") {
    ms.kind = Kind::monomial;
    if (!plain.empty()) ms.n = std::stoi(plain[0]);
    ms.Ln = plain.size() > 1 ? rat_parse(plain[1]) : (ms.n == 2 ? Rat(2) : Rat(1));
  } else if (kind == "tate" || kind == "tate_circle") {
    ms.kind = Kind::tate_circle;
    ms.n = 1;
    if (!plain.empty()) ms.q = rat_parse(plain[0]);
  } else if (kind == "random") {
    ms.kind = Kind::random_basis;
    if (plain.size() < 3)
      throw Error(ErrorCode::malformed_input, "random(n,l_max,seed[,budget][,single])");
    ms.n = std::stoi(plain[0]);
    ms.l_max = std::stoi(plain[1]);
    ms.seed = std::stoull(plain[2]);
    if (plain.size() > 3) ms.term_budget = std::stoll(plain[3]);
    if (plain.size() > 4) ms.single_term = plain[4] == "single" || plain[4] == "1";
  } else if (kind == "product") {
    ms.kind = Kind::torus_product;
    for (const auto& a : plain) ms.components.push_back(ModelSpec::parse(a));
    ms.n = static_cast<int>(ms.components.size());
  } else {
    throw Error(ErrorCode::malformed_input, "unknown model kind '" + kind + "'");
  }
  return ms;
}

std::string ModelSpec::str() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::monomial:
      os << "monomial(" << n << "," << rat_str(Ln) << ",lmax=" << l_max << ")";
      break;
    case Kind::tate_circle:
      os << "tate(" << rat_str(q) << ",lmax=" << l_max << ")";
      break;
    case Kind::random_basis:
      os << "random(" << n << "," << l_max << "," << seed << "," << term_budget
         << (single_term ? ",single" : "") << ")";
      break;
    case Kind::torus_product: {
      os << "product(";
      for (size_t i = 0; i < components.size(); ++i)
        os << (i ? "," : "") << components[i].str();
      os << ",lmax=" << l_max << ")";
      break;
    }
  }
  return os.str();
}

Transport1D oracle_1d_transport(const SkeletonMeasure& mu, int face,
                                const std::vector<double>& atoms_p,
                                const std::vector<double>& atoms_w, double y) {
  if (mu.skeleton()->n() != 1)
    throw Error(ErrorCode::dimension_not_1, "monotone rearrangement needs n = 1");
  const size_t m = atoms_p.size();
  Transport1D out;
  out.order.resize(m);
  for (size_t i = 0; i < m; ++i) out.order[i] = static_cast<int>(i);
  std::sort(out.order.begin(), out.order.end(),
            [&](int a, int b) { return atoms_p[a] < atoms_p[b]; });

  const Box bb = mu.skeleton()->face(face).chart.bounding_box();
  const double lo = rat_d(bb.lo[0]), hi = rat_d(bb.hi[0]);
  out.boundaries.push_back(lo);
  double want = 0;
  for (size_t i = 0; i + 1 < m; ++i) {
    want += atoms_w[out.order[i]];
    // Invert the CDF by bisection on the exact interval-mass function.
    double a = out.boundaries.back(), b = hi;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (a + b);
      (mu.mass_of_interval(face, lo, mid) < want ? a : b) = mid;
    }
    out.boundaries.push_back(0.5 * (a + b));
  }
  out.boundaries.push_back(hi);

  // Functional value sum_j ∫_cell p_j (x - y) dμ, exact per density piece.
  double total = 0;
  for (size_t i = 0; i < m; ++i) {
    double a = out.boundaries[i], b = out.boundaries[i + 1];
    double acc = 0;
    for (const auto& piece : mu.pieces()[face]) {
      double pa = std::max(a, rat_d(piece.box.lo[0]));
      double pb = std::min(b, rat_d(piece.box.hi[0]));
      if (pb <= pa) continue;
      double d = rat_d(piece.value);
      acc += d * (0.5 * (pb * pb - pa * pa) - y * (pb - pa));
    }
    total += atoms_p[out.order[i]] * acc;
  }
  out.cost_value = total;
  return out;
}

}  // namespace skelot
