#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "skelot/models.hpp"
#include "skelot/okounkov.hpp"

namespace skelot {

/// Values on the skeleton quadrature grid.
struct GridFunction {
  const SkeletonGrid* grid = nullptr;
  std::vector<double> v;
};

/// Values on the body sample set.
struct BodyFunction {
  const BodyMeasure* samples = nullptr;
  std::vector<double> v;
  std::vector<int> argmax;  // per-sample maximiser index when produced by a transform
};

/// Evaluator for c(x, p; y), normalised to zero at the anchor. Closed-form
/// modes come from the built-in models; the fekete mode reads a validated
/// basis family directly. Pure and reentrant; share freely across workers.
class CostField {
 public:
  enum class Mode { closed_form, fekete };

  /// Closed-form field; the model must carry a CostForm.
  static CostField closed_form(const Model& model, const Anchor& anchor,
                               const OkounkovBody& body);

  /// Degree-truncated field from the model's validated bases.
  static CostField fekete(const Model& model, const Anchor& anchor, const OkounkovBody& body,
                          int l_max);

  Mode mode() const { return mode_; }
  const Anchor& anchor() const { return anchor_; }
  const OkounkovBody& body() const { return body_; }
  const Skeleton& skeleton() const { return *sk_; }
  double lipschitz() const { return lipschitz_; }
  int fekete_l_max() const { return l_max_; }

  double eval(int face, const std::vector<double>& x, const std::vector<double>& p) const;

  /// True when x -> c(x,p) is globally affine with gradient p on every face
  /// (then power cells are exact halfspace intersections).
  bool affine_in_x() const;

  /// True when cell masses can be computed without a quadrature grid:
  /// any closed form on 1-D skeletons, affine costs up to 2-D.
  bool supports_exact_cells() const;

  /// 1-D faces: interior x where the active branch of c(.,p) changes.
  std::vector<double> x_breakpoints(int face, const std::vector<double>& p) const;

  /// Active-branch x-gradient at x; unique=false within tie_tol of a branch
  /// change.
  struct XGradient {
    std::vector<double> grad;
    bool unique = true;
  };
  XGradient x_gradient(int face, const std::vector<double>& x, const std::vector<double>& p,
                       double tie_tol = 1e-9) const;

  /// Exact x-gradient for exact sample coordinates (closed forms only):
  /// gradient = p + integer branch offset per circle coordinate.
  RatVec x_gradient_exact(int face, const RatVec& x, const RatVec& p) const;

 private:
  Mode mode_ = Mode::closed_form;
  const Skeleton* sk_ = nullptr;
  const BasisFamily* family_ = nullptr;
  std::optional<CostForm> form_;
  Anchor anchor_;
  OkounkovBody body_;
  double lipschitz_ = 0;
  int l_max_ = 0;
  bool all_single_term_ = false;
  // degree -> (gradient at anchor -> section index)
  std::map<int, std::map<std::vector<long long>, int>> grad_index_;

  friend struct FeketeValue fekete_cost(const CostField&, int, const std::vector<double>&,
                                        const std::vector<double>&);
  friend struct AffineDomainResult affine_domain(const CostField&, const ConvexPoly&);
};

struct FeketeValue {
  double value = 0;
  double error = 0;    // |c_l - c_{l/2}| + C |p - p(alpha)/l|
  int degree = 0;      // degree actually used
  std::string label;   // section used
  bool exact = false;  // single-term family, affine value with zero error
};

/// Degree-truncated cost value with a reported error bound. Uses the
/// section whose anchor gradient is the nearest lattice approximation of
/// l p at the largest degree containing it.
FeketeValue fekete_cost(const CostField& cf, int face, const std::vector<double>& x,
                        const std::vector<double>& p);

/// phi^c on the body samples: per-sample max over the skeleton grid of
/// c(x,p) - phi(x). Maximiser indices are recorded. Deterministic for any
/// worker count.
BodyFunction c_transform_skeleton_to_body(const GridFunction& phi, const CostField& cf,
                                          const BodyMeasure& samples);

/// psi^c on the skeleton grid: per-node max over the body samples.
GridFunction c_transform_body_to_skeleton(const BodyFunction& psi, const CostField& cf,
                                          const SkeletonGrid& grid);

/// (f^c)^c: the largest minorant of f representable as max_j c(.,p_j) - w_j
/// over the sample set. Idempotent.
GridFunction project_to_Pc(const GridFunction& f, const CostField& cf,
                           const BodyMeasure& samples);

struct AffineDomainResult {
  bool found = false;
  ConvexPoly domain;           // polytope U around the anchor
  /// Hull of the lattice directions actually certified. On U the cost is
  /// exactly <p, x-y> for every p in this hull: the tested directions give
  /// equality and convexity in p pins everything in between. The hull
  /// exhausts K as l_max grows.
  ConvexPoly certified;
  std::string failure;         // "ShrunkToPoint ..." when not found
  std::vector<std::pair<int, std::vector<long long>>> missing_lattice;  // (l, lp) gaps
};

/// Certified polytope U around the anchor on which every tested lattice
/// direction p(alpha)/l in K has a single argmax term. K must be strictly
/// inside the body.
AffineDomainResult affine_domain(const CostField& cf, const ConvexPoly& K);

}  // namespace skelot
