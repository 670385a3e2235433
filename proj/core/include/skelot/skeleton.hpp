#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skelot/geometry.hpp"
#include "skelot/rational.hpp"

namespace skelot {

/// Polyhedral face with an integral affine chart. The chart is the convex
/// hull of the listed vertices inside R^n; the lattice is Z^dim in chart
/// coordinates.
struct Face {
  std::string id;
  int dim = 0;
  std::vector<RatVec> vertices;
  ConvexPoly chart;  // populated for faces living in ambient dim <= 2
};

/// Integral affine identification x -> A x + t between two face charts.
/// A must be unimodular so the lattice is preserved.
struct Gluing {
  int from = -1, to = -1;
  std::vector<std::vector<long long>> lin;  // n x n, |det| = 1
  RatVec shift;

  RatVec apply(const RatVec& x) const;
  RatVec apply_inverse(const RatVec& x) const;
};

struct SkeletonPoint {
  int face = -1;
  RatVec coords;
};

/// Finite polyhedral complex with integral affine charts on the top faces.
/// Immutable after construction; safe for concurrent reads.
class Skeleton {
 public:
  /// Builds and validates from the JSON document
  ///   {"n": int, "faces": [{"id": str, "vertices": [["p/q",...],...]}],
  ///    "gluings": [{"from": str, "to": str, "linear": [[int]],
  ///                 "translate": ["p/q",...]}]}
  static Skeleton build(const nlohmann::json& doc);

  int n() const { return n_; }
  const std::vector<Face>& faces() const { return faces_; }
  const std::vector<Gluing>& gluings() const { return gluings_; }
  const std::vector<int>& top_faces() const { return top_; }

  int face_index(const std::string& id) const;
  const Face& face(int idx) const { return faces_[idx]; }

  /// Points on the shared locus of each gluing, used by section validators:
  /// pairs (x in from-chart, g(x) in to-chart). Vertices of the identified
  /// region plus edge midpoints.
  std::vector<std::pair<SkeletonPoint, SkeletonPoint>> gluing_samples(int g) const;

  nlohmann::json to_json() const;

 private:
  int n_ = 0;
  std::vector<Face> faces_;
  std::vector<Gluing> gluings_;
  std::vector<int> top_;
  std::map<std::string, int> index_;

  void validate() const;
};

/// Piecewise-constant density piece on a top face: constant `value` on
/// box ∩ chart.
struct DensityPiece {
  Box box;
  Rat value;
};

struct DensitySpec {
  // face id -> pieces; faces not listed get a single unit piece.
  std::map<std::string, std::vector<DensityPiece>> pieces;
};

/// Probability measure on the skeleton: piecewise-constant density on top
/// faces, zero on lower-dimensional faces, total mass one after
/// normalisation.
class SkeletonMeasure {
 public:
  const Skeleton* skeleton() const { return sk_; }
  /// Pieces per top face, density values already normalised.
  const std::vector<std::vector<DensityPiece>>& pieces() const { return pieces_; }

  double density_at(int face, const std::vector<double>& x) const;
  Rat density_at_exact(int face, const RatVec& x) const;

  /// Exact mass of box ∩ face (top faces only; needs ambient dim <= 2).
  Rat mass_of_box(int face, const Box& b) const;
  /// Mass of an interval [lo,hi] on a 1-D face.
  double mass_of_interval(int face, double lo, double hi) const;

  friend SkeletonMeasure lebesgue_measure(const Skeleton&, const std::optional<DensitySpec>&);

 private:
  const Skeleton* sk_ = nullptr;
  std::vector<std::vector<DensityPiece>> pieces_;  // aligned with sk_->faces()
};

/// Normalised Lebesgue-type measure; uniform when no density is given.
SkeletonMeasure lebesgue_measure(const Skeleton& sk,
                                 const std::optional<DensitySpec>& density = std::nullopt);

/// Midpoint quadrature node.
struct GridNode {
  int face = -1;
  std::vector<double> x;
  double w = 0;  // density times cell volume, so the weights sum to one
};

/// Deterministic midpoint grid over the top faces at resolution h.
/// Cells are aligned per density piece so the piecewise-constant density is
/// integrated exactly; boundary cells are clipped exactly.
class SkeletonGrid {
 public:
  SkeletonGrid(const Skeleton& sk, const SkeletonMeasure& mu, double h);

  const Skeleton& skeleton() const { return *sk_; }
  const SkeletonMeasure& measure() const { return *mu_; }
  double resolution() const { return h_; }
  const std::vector<GridNode>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  const Skeleton* sk_;
  const SkeletonMeasure* mu_;
  double h_;
  std::vector<GridNode> nodes_;
};

/// Midpoint-rule integral of f against the measure; O(h^2) for Lipschitz f
/// on each face.
double integrate(const SkeletonMeasure& mu,
                 const std::function<double(int face, const std::vector<double>&)>& f,
                 double h);

double integrate(const SkeletonGrid& grid,
                 const std::function<double(int face, const std::vector<double>&)>& f);

}  // namespace skelot
