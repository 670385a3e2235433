#include "skelot/cost.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "skelot/error.hpp"
#include "skelot/threads.hpp"

namespace skelot {

namespace {

/// max_{w in p+Z} (w z - q w^2), the circle-component building block.
/// The maximiser is the coset point nearest z/(2q).
double circle_h(double z, double p, double q) {
  double k0 = std::round(z / (2 * q) - p);
  double best = -1e300;
  for (double k = k0 - 1; k <= k0 + 1; ++k) {
    double w = p + k;
    best = std::max(best, w * z - q * w * w);
  }
  return best;
}

long long circle_argmax_k(double z, double p, double q) {
  long long k0 = static_cast<long long>(std::llround(z / (2 * q) - p));
  long long best_k = k0;
  double best = -1e300;
  for (long long k = k0 - 1; k <= k0 + 1; ++k) {
    double w = p + static_cast<double>(k);
    double v = w * z - q * w * w;
    if (v > best) {
      best = v;
      best_k = k;
    }
  }
  return best_k;
}

long long circle_argmax_k_exact(const Rat& z, const Rat& p, const Rat& q) {
  long long k0 = static_cast<long long>(std::llround(rat_d(z) / (2 * rat_d(q)) - rat_d(p)));
  long long best_k = k0 - 2;
  Rat best;
  bool first = true;
  for (long long k = k0 - 2; k <= k0 + 2; ++k) {
    Rat w = p + rat_ll(k);
    Rat v = w * z - q * w * w;
    if (first || v > best) {
      best = v;
      best_k = k;
      first = false;
    }
  }
  return best_k;
}

}  // namespace

CostField CostField::closed_form(const Model& model, const Anchor& anchor,
                                 const OkounkovBody& body) {
  if (!model.closed_form)
    throw Error(ErrorCode::malformed_input, "model '" + model.name + "' has no closed-form cost");
  CostField cf;
  cf.mode_ = Mode::closed_form;
  cf.sk_ = &model.skeleton;
  cf.family_ = &model.bases;
  cf.form_ = model.closed_form;
  cf.anchor_ = anchor;
  cf.body_ = body;
  cf.lipschitz_ = lipschitz_constant(model.bases);
  cf.l_max_ = 0;
  for (const auto& [l, b] : model.bases)
    if (l <= anchor.irrationality_level) cf.l_max_ = std::max(cf.l_max_, l);
  for (const auto& [l, b] : model.bases) {
    if (l > anchor.irrationality_level) continue;
    auto& idx = cf.grad_index_[l];
    for (size_t si = 0; si < b.sections.size(); ++si) {
      auto gs = b.sections[si].gradients_at(model.skeleton, anchor.y);
      idx[*gs.begin()] = static_cast<int>(si);
    }
  }
  cf.all_single_term_ = true;
  for (const auto& [l, b] : model.bases)
    for (const auto& s : b.sections)
      for (const auto& [fid, ts] : s.terms)
        if (ts.size() > 1) cf.all_single_term_ = false;
  return cf;
}

CostField CostField::fekete(const Model& model, const Anchor& anchor, const OkounkovBody& body,
                            int l_max) {
  CostField cf;
  cf.mode_ = Mode::fekete;
  cf.sk_ = &model.skeleton;
  cf.family_ = &model.bases;
  cf.form_ = model.closed_form;  // kept for diagnostics only
  cf.anchor_ = anchor;
  cf.body_ = body;
  cf.lipschitz_ = lipschitz_constant(model.bases);
  cf.l_max_ = 0;
  cf.all_single_term_ = true;
  for (const auto& [l, b] : model.bases) {
    if (l > l_max || l > anchor.irrationality_level) continue;
    cf.l_max_ = std::max(cf.l_max_, l);
    auto& idx = cf.grad_index_[l];
    for (size_t si = 0; si < b.sections.size(); ++si) {
      auto gs = b.sections[si].gradients_at(model.skeleton, anchor.y);
      if (gs.size() != 1)
        throw Error(ErrorCode::non_unique_gradient,
                    "anchor sits on a wall of degree " + std::to_string(l));
      idx[*gs.begin()] = static_cast<int>(si);
    }
    for (const auto& s : b.sections)
      for (const auto& [fid, ts] : s.terms)
        if (ts.size() > 1) cf.all_single_term_ = false;
  }
  if (cf.grad_index_.empty())
    throw Error(ErrorCode::malformed_input, "no usable degrees at or below l_max");
  return cf;
}

bool CostField::supports_exact_cells() const {
  const int n = sk_->n();
  if (n == 1 && mode_ == Mode::closed_form) return true;
  return n <= 2 && affine_in_x();
}

bool CostField::affine_in_x() const {
  if (mode_ == Mode::fekete) return all_single_term_;
  for (auto c : form_->comp)
    if (c != CostForm::Comp::affine) return false;
  return true;
}

double CostField::eval(int face, const std::vector<double>& x,
                       const std::vector<double>& p) const {
  if (mode_ == Mode::closed_form) {
    double v = 0;
    for (size_t d = 0; d < x.size(); ++d) {
      if (form_->comp[d] == CostForm::Comp::affine) {
        v += p[d] * (x[d] - anchor_.yd[d]);
      } else {
        double q = rat_d(form_->q[d]);
        v += circle_h(x[d], p[d], q) - circle_h(anchor_.yd[d], p[d], q);
      }
    }
    return v;
  }
  return fekete_cost(*this, face, x, p).value;
}

std::vector<double> CostField::x_breakpoints(int face, const std::vector<double>& p) const {
  std::vector<double> out;
  if (sk_->n() != 1) return out;
  if (mode_ == Mode::closed_form && form_->comp[0] == CostForm::Comp::affine) return out;
  const Box bb = sk_->face(face).chart.bounding_box();
  const double lo = rat_d(bb.lo[0]), hi = rat_d(bb.hi[0]);
  if (mode_ == Mode::closed_form) {
    double q = rat_d(form_->q[0]);
    // Branch k and k+1 tie at z = q (2p + 2k + 1).
    long long klo = static_cast<long long>(std::floor(lo / (2 * q) - p[0])) - 2;
    long long khi = static_cast<long long>(std::ceil(hi / (2 * q) - p[0])) + 2;
    for (long long k = klo; k <= khi; ++k) {
      double z = q * (2 * p[0] + 2 * static_cast<double>(k) + 1);
      if (z > lo && z < hi) out.push_back(z);
    }
    std::sort(out.begin(), out.end());
    return out;
  }
  // Fekete: breakpoints of the snapped section's envelope.
  FeketeValue fv = fekete_cost(*this, face, {0.5 * (lo + hi)}, p);
  const DegreeBasis& b = family_->at(fv.degree);
  for (const auto& s : b.sections) {
    if (s.label != fv.label) continue;
    for (const Rat& r : s.breakpoints_1d(*sk_, face)) out.push_back(rat_d(r));
  }
  std::sort(out.begin(), out.end());
  return out;
}

CostField::XGradient CostField::x_gradient(int face, const std::vector<double>& x,
                                           const std::vector<double>& p, double tie_tol) const {
  XGradient g;
  if (mode_ == Mode::closed_form) {
    g.grad.resize(x.size());
    for (size_t d = 0; d < x.size(); ++d) {
      if (form_->comp[d] == CostForm::Comp::affine) {
        g.grad[d] = p[d];
      } else {
        double q = rat_d(form_->q[d]);
        long long k = circle_argmax_k(x[d], p[d], q);
        g.grad[d] = p[d] + static_cast<double>(k);
        double tie_low = q * (2 * p[d] + 2 * static_cast<double>(k) - 1);
        double tie_high = q * (2 * p[d] + 2 * static_cast<double>(k) + 1);
        if (x[d] - tie_low < tie_tol || tie_high - x[d] < tie_tol) g.unique = false;
      }
    }
    return g;
  }
  FeketeValue fv = fekete_cost(*this, face, x, p);
  const DegreeBasis& b = family_->at(fv.degree);
  for (const auto& s : b.sections) {
    if (s.label != fv.label) continue;
    const auto* ts = s.terms_on(*sk_, face);
    double best = -1e300, second = -1e300;
    const MonomialTerm* win = nullptr;
    for (const auto& t : *ts) {
      double v = -rat_d(t.a);
      for (size_t d = 0; d < x.size(); ++d) v += static_cast<double>(t.p[d]) * x[d];
      if (v > best) {
        second = best;
        best = v;
        win = &t;
      } else if (v > second) {
        second = v;
      }
    }
    g.grad.resize(x.size());
    for (size_t d = 0; d < x.size(); ++d)
      g.grad[d] = static_cast<double>(win->p[d]) / fv.degree;
    if (best - second < tie_tol) g.unique = false;
    return g;
  }
  throw Error(ErrorCode::internal, "snapped section disappeared");
}

RatVec CostField::x_gradient_exact(int face, const RatVec& x, const RatVec& p) const {
  (void)face;
  if (mode_ != Mode::closed_form)
    throw Error(ErrorCode::internal, "exact gradients need a closed-form cost");
  RatVec g(x.size());
  for (size_t d = 0; d < x.size(); ++d) {
    if (form_->comp[d] == CostForm::Comp::affine) {
      g[d] = p[d];
    } else {
      long long k = circle_argmax_k_exact(x[d], p[d], form_->q[d]);
      g[d] = p[d] + rat_ll(k);
    }
  }
  return g;
}

namespace {

bool strictly_inside(const OkounkovBody& body, const std::vector<double>& p) {
  for (const auto& h : body.halfspaces) {
    double s = 0;
    for (size_t d = 0; d < p.size(); ++d) s += rat_d(h.a[d]) * p[d];
    double b = rat_d(h.b);
    if (s >= b - 1e-12 * (1.0 + std::fabs(b))) return false;
  }
  return true;
}

}  // namespace

FeketeValue fekete_cost(const CostField& cf, int face, const std::vector<double>& x,
                        const std::vector<double>& p) {
  if (!strictly_inside(cf.body(), p))
    throw Error(ErrorCode::p_not_in_body, "p is not strictly inside the body interior");

  FeketeValue out;
  if (cf.mode() == CostField::Mode::fekete && cf.all_single_term_) {
    // Single-term families have exactly affine limits.
    double v = 0;
    for (size_t d = 0; d < p.size(); ++d) v += p[d] * (x[d] - cf.anchor().yd[d]);
    out.value = v;
    out.error = 0;
    out.exact = true;
    out.degree = cf.grad_index_.rbegin()->first;
    out.label = "affine";
    return out;
  }
  if (cf.mode() == CostField::Mode::closed_form && cf.affine_in_x()) {
    double v = 0;
    for (size_t d = 0; d < p.size(); ++d) v += p[d] * (x[d] - cf.anchor().yd[d]);
    out = FeketeValue{v, 0, cf.fekete_l_max(), "affine", true};
    return out;
  }

  const Skeleton& sk = cf.skeleton();
  auto value_at = [&](int l, int si) {
    const TropicalSection& s = cf.family_->at(l).sections[si];
    double vx = s.eval(sk, face, x);
    double vy = s.eval(sk, cf.anchor().y.face, cf.anchor().yd);
    return (vx - vy) / l;
  };
  auto snapped = [&](int l) -> std::optional<int> {
    std::vector<long long> g(p.size());
    for (size_t d = 0; d < p.size(); ++d) g[d] = std::llround(l * p[d]);
    auto it = cf.grad_index_.at(l).find(g);
    if (it == cf.grad_index_.at(l).end()) return std::nullopt;
    return it->second;
  };

  for (auto dit = cf.grad_index_.rbegin(); dit != cf.grad_index_.rend(); ++dit) {
    const int l = dit->first;
    auto si = snapped(l);
    if (!si) continue;
    out.degree = l;
    out.label = cf.family_->at(l).sections[*si].label;
    out.value = value_at(l, *si);
    double snap_err = 0;
    for (size_t d = 0; d < p.size(); ++d)
      snap_err = std::max(snap_err, std::fabs(p[d] - std::llround(l * p[d]) / static_cast<double>(l)));
    double cauchy = 0;
    for (int l2 = l / 2; l2 >= 1; --l2) {
      if (!cf.grad_index_.count(l2)) continue;
      auto s2 = snapped(l2);
      if (!s2) continue;
      cauchy = std::fabs(out.value - value_at(l2, *s2));
      break;
    }
    out.error = cauchy + cf.lipschitz() * snap_err;
    return out;
  }
  throw Error(ErrorCode::no_lattice_point,
              "no materialised degree carries the lattice approximation of l*p; raise l_max");
}

BodyFunction c_transform_skeleton_to_body(const GridFunction& phi, const CostField& cf,
                                          const BodyMeasure& samples) {
  BodyFunction out;
  out.samples = &samples;
  out.v.resize(samples.size());
  out.argmax.assign(samples.size(), -1);
  const auto& nodes = phi.grid->nodes();
  parallel_for(samples.size(), [&](std::size_t j) {
    const auto& p = samples.points()[j];
    double best = -1e300;
    int arg = -1;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      double v = cf.eval(nodes[i].face, nodes[i].x, p) - phi.v[i];
      if (v > best) {
        best = v;
        arg = static_cast<int>(i);
      }
    }
    out.v[j] = best;
    out.argmax[j] = arg;
  });
  return out;
}

GridFunction c_transform_body_to_skeleton(const BodyFunction& psi, const CostField& cf,
                                          const SkeletonGrid& grid) {
  GridFunction out;
  out.grid = &grid;
  out.v.resize(grid.size());
  const auto& nodes = grid.nodes();
  parallel_for(grid.size(), [&](std::size_t i) {
    double best = -1e300;
    for (std::size_t j = 0; j < psi.samples->size(); ++j) {
      double v = cf.eval(nodes[i].face, nodes[i].x, psi.samples->points()[j]) - psi.v[j];
      if (v > best) best = v;
    }
    out.v[i] = best;
  });
  return out;
}

GridFunction project_to_Pc(const GridFunction& f, const CostField& cf,
                           const BodyMeasure& samples) {
  BodyFunction fc = c_transform_skeleton_to_body(f, cf, samples);
  return c_transform_body_to_skeleton(fc, cf, *f.grid);
}

AffineDomainResult affine_domain(const CostField& cf, const ConvexPoly& K) {
  AffineDomainResult res;
  const Skeleton& sk = cf.skeleton();
  const int n = sk.n();

  for (const auto& v : K.vertices()) {
    if (!cf.body().contains_interior(v)) {
      res.failure = "ShrunkToPoint: K is not strictly inside the body interior";
      return res;
    }
  }

  const int face = cf.anchor().y.face;
  ConvexPoly U = sk.face(face).chart;
  std::vector<RatVec> certified_dirs;

  if (cf.family_ && !cf.grad_index_.empty()) {
    for (const auto& [l, idx] : cf.grad_index_) {
      // Enumerate lK ∩ Z^n.
      Box kb = K.bounding_box();
      std::vector<long long> lo(n), hi(n);
      for (int d = 0; d < n; ++d) {
        Rat a = kb.lo[d] * l, b = kb.hi[d] * l;
        lo[d] = static_cast<long long>(std::ceil(rat_d(a) - 1e-9));
        hi[d] = static_cast<long long>(std::floor(rat_d(b) + 1e-9));
        while (rat_ll(lo[d]) < a) ++lo[d];
        while (rat_ll(hi[d]) > b) --hi[d];
      }
      std::vector<long long> g(n, 0);
      std::vector<std::vector<long long>> pts;
      std::function<void(int)> walk = [&](int d) {
        if (d == n) {
          RatVec scaled(n);
          for (int dd = 0; dd < n; ++dd) scaled[dd] = rat_frac(g[dd], l);
          if (K.contains(scaled)) pts.push_back(g);
          return;
        }
        for (long long vv = lo[d]; vv <= hi[d]; ++vv) {
          g[d] = vv;
          walk(d + 1);
        }
      };
      walk(0);
      for (const auto& gg : pts) {
        auto it = idx.find(gg);
        if (it == idx.end()) {
          res.missing_lattice.push_back({l, gg});
          continue;
        }
        const TropicalSection& s = cf.family_->at(l).sections[it->second];
        const auto* ts = s.terms_on(sk, face);
        // Anchor-winning term: the one with gradient gg.
        const MonomialTerm* win = nullptr;
        for (const auto& t : *ts)
          if (t.p == gg) win = &t;
        if (!win) continue;
        RatVec dir(n);
        for (int d = 0; d < n; ++d) dir[d] = rat_frac(gg[d], l);
        certified_dirs.push_back(std::move(dir));
        for (const auto& t : *ts) {
          if (&t == win) continue;
          RatVec a(n);
          for (int d = 0; d < n; ++d) a[d] = rat_ll(t.p[d] - win->p[d]);
          U = U.clip(a, t.a - win->a);
          if (U.empty()) break;
        }
        if (U.empty()) break;
      }
    }
  } else if (cf.form_) {
    // Closed form: affine components impose nothing; circle components pin
    // x_d to the window where the base branch wins for every p in K.
    Box kb = K.bounding_box();
    for (int d = 0; d < n; ++d) {
      if (cf.form_->comp[d] == CostForm::Comp::affine) continue;
      const Rat& q = cf.form_->q[d];
      RatVec up(n, Rat(0)), dn(n, Rat(0));
      up[d] = 1;
      dn[d] = -1;
      U = U.clip(up, 2 * q * kb.lo[d] + q);
      U = U.clip(dn, -(2 * q * kb.hi[d] - q));
    }
  }

  if (U.empty() || U.dim() < n) {
    res.failure = "ShrunkToPoint: no full-dimensional affinity domain at this l_max";
    return res;
  }
  if (cf.family_ && !cf.grad_index_.empty()) {
    if (certified_dirs.empty()) {
      res.failure = "ShrunkToPoint: K holds no lattice directions at this l_max";
      return res;
    }
    res.certified = ConvexPoly::hull(n, certified_dirs);
  } else {
    res.certified = K;  // closed forms certify the whole window analytically
  }
  res.found = true;
  res.domain = U;
  return res;
}

}  // namespace skelot
