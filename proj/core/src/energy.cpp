#include "skelot/energy.hpp"

#include <algorithm>
#include <cmath>

#include "skelot/error.hpp"

namespace skelot {

namespace {

/// Probe set for exact sups of piecewise-affine integrands on a 1-D face:
/// grid nodes plus endpoints plus all supplied breakpoints.
std::vector<std::vector<double>> probes_on_face(const Skeleton& sk, int face,
                                                const SkeletonGrid& grid,
                                                const std::vector<double>& extra) {
  std::vector<std::vector<double>> pts;
  for (const auto& nd : grid.nodes())
    if (nd.face == face) pts.push_back(nd.x);
  if (sk.n() == 1) {
    const Box bb = sk.face(face).chart.bounding_box();
    pts.push_back({rat_d(bb.lo[0])});
    pts.push_back({rat_d(bb.hi[0])});
    for (double b : extra) pts.push_back({b});
  }
  return pts;
}

}  // namespace

DiagonalNorm sup_norm_diagonal(const Skeleton& sk, const DegreeBasis& basis,
                               const SkeletonFn& phi, const Anchor& anchor,
                               const SkeletonGrid& grid, const BreakpointsFn& phi_breaks) {
  DiagonalNorm out;
  out.degree = basis.degree;
  const int l = basis.degree;
  for (const auto& s : basis.sections) {
    double log_y = s.eval(sk, anchor.y.face, anchor.yd);
    double best = -1e300;
    for (int face : sk.top_faces()) {
      std::vector<double> extra;
      if (sk.n() == 1) {
        for (const Rat& r : s.breakpoints_1d(sk, face)) extra.push_back(rat_d(r));
        if (phi_breaks) {
          auto fb = phi_breaks(face);
          extra.insert(extra.end(), fb.begin(), fb.end());
        }
      }
      for (const auto& x : probes_on_face(sk, face, grid, extra)) {
        double v = (s.eval(sk, face, x) - log_y) / l - phi(face, x);
        best = std::max(best, v);
      }
    }
    out.labels.push_back(s.label);
    out.log_norms.push_back(l * best + log_y);
  }
  return out;
}

double relative_volume(const DiagonalNorm& n1, const DiagonalNorm& n2) {
  if (n1.degree != n2.degree || n1.log_norms.size() != n2.log_norms.size())
    throw Error(ErrorCode::degree_mismatch, "norms live on different section spaces");
  double s = 0;
  for (size_t i = 0; i < n1.log_norms.size(); ++i) s += n2.log_norms[i] - n1.log_norms[i];
  return s;
}

EnergyIntegral ma_energy_integral(const GridFunction& phi, const CostField& cf,
                                  const BodyMeasure& nu, const Rat& Ln) {
  EnergyIntegral out;
  GridFunction proj = project_to_Pc(phi, cf, nu);
  double drift = 0;
  for (size_t i = 0; i < phi.v.size(); ++i) drift = std::max(drift, std::fabs(proj.v[i] - phi.v[i]));
  out.projected = drift > 1e-9;
  const GridFunction& use = out.projected ? proj : phi;
  BodyFunction fc = c_transform_skeleton_to_body(use, cf, nu);
  double acc = 0;
  for (size_t j = 0; j < nu.size(); ++j) acc += nu.weights()[j] * fc.v[j];
  out.value = -rat_d(Ln) * acc;
  return out;
}

namespace {

EnergyReport consistency_core(const SkeletonFn& phi, const BreakpointsFn& phi_breaks,
                              const SkeletonFn& psi, const BreakpointsFn& psi_breaks,
                              const BasisFamily& family, const CostField& cf,
                              const BodyMeasure& nu, const Rat& Ln,
                              const std::vector<int>& schedule, const SkeletonGrid& grid) {
  const Skeleton& sk = cf.skeleton();
  const int n = sk.n();
  double fact = 1;
  for (int i = 2; i <= n; ++i) fact *= i;

  EnergyReport rep;
  for (int l : schedule) {
    auto it = family.find(l);
    if (it == family.end()) continue;
    DiagonalNorm na = sup_norm_diagonal(sk, it->second, phi, cf.anchor(), grid, phi_breaks);
    DiagonalNorm nb = sup_norm_diagonal(sk, it->second, psi, cf.anchor(), grid, psi_breaks);
    double vol = relative_volume(na, nb);
    rep.limit_values.push_back({l, fact / std::pow(static_cast<double>(l), n + 1) * vol});
  }
  for (size_t i = 1; i < rep.limit_values.size(); ++i)
    rep.cauchy_gaps.push_back(
        std::fabs(rep.limit_values[i].second - rep.limit_values[i - 1].second));

  // Integral side: exact sups of c(.,p_j) - f over probe sets.
  auto transform_at = [&](const SkeletonFn& f, const BreakpointsFn& fb,
                          const std::vector<double>& p) {
    double best = -1e300;
    for (int face : sk.top_faces()) {
      std::vector<double> extra = cf.x_breakpoints(face, p);
      if (sk.n() == 1 && fb) {
        auto more = fb(face);
        extra.insert(extra.end(), more.begin(), more.end());
      }
      for (const auto& x : probes_on_face(sk, face, grid, extra))
        best = std::max(best, cf.eval(face, x, p) - f(face, x));
    }
    return best;
  };
  double acc = 0;
  for (size_t j = 0; j < nu.size(); ++j) {
    const auto& p = nu.points()[j];
    acc += nu.weights()[j] * (transform_at(phi, phi_breaks, p) - transform_at(psi, psi_breaks, p));
  }
  rep.integral_diff = -rat_d(Ln) * acc;
  if (!rep.limit_values.empty())
    rep.final_vs_integral = std::fabs(rep.limit_values.back().second - rep.integral_diff);
  return rep;
}

}  // namespace

EnergyReport energy_consistency(const SkeletonFn& phi, const BreakpointsFn& phi_breaks,
                                const SkeletonFn& psi, const BreakpointsFn& psi_breaks,
                                const BasisFamily& family, const CostField& cf,
                                const BodyMeasure& nu, const Rat& Ln,
                                const std::vector<int>& schedule, const SkeletonGrid& grid) {
  return consistency_core(phi, phi_breaks, psi, psi_breaks, family, cf, nu, Ln, schedule, grid);
}

EnergyReport energy_consistency(const GridFunction& phi, const GridFunction& psi,
                                const BasisFamily& family, const CostField& cf,
                                const BodyMeasure& nu, const Rat& Ln,
                                const std::vector<int>& schedule) {
  const SkeletonGrid& grid = *phi.grid;
  // Nodal lookup: nearest grid node on the same face.
  auto nodal = [&grid](const GridFunction& f) {
    return [&grid, &f](int face, const std::vector<double>& x) {
      double best = 1e300;
      double val = 0;
      for (size_t i = 0; i < grid.nodes().size(); ++i) {
        const auto& nd = grid.nodes()[i];
        if (nd.face != face) continue;
        double d = 0;
        for (size_t c = 0; c < x.size(); ++c) d += std::fabs(nd.x[c] - x[c]);
        if (d < best) {
          best = d;
          val = f.v[i];
        }
      }
      return val;
    };
  };
  return consistency_core(nodal(phi), nullptr, nodal(psi), nullptr, family, cf, nu, Ln, schedule,
                          grid);
}

}  // namespace skelot
