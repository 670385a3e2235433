#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skelot/tropical.hpp"

namespace skelot {

/// Base point for gradient extraction. Must sit strictly inside a top face
/// and off every wall up to the stated level.
struct Anchor {
  SkeletonPoint y;
  int irrationality_level = 0;
  std::vector<double> yd;  // cached double coordinates
};

/// Validates sufficient irrationality at l_max and builds the anchor.
Anchor make_anchor(const Skeleton& sk, const BasisFamily& family, int l_max,
                   const SkeletonPoint& y);

/// Per-degree argmax gradient sets at the anchor. Closed under addition of
/// levels when the family is multiplicatively coherent; the additivity
/// check result is recorded, never assumed.
struct GradientSemigroup {
  Anchor anchor;
  std::map<int, std::set<std::vector<long long>>> levels;
  int l_max = 0;
  bool additivity_ok = false;
  std::vector<std::string> additivity_failures;
};

GradientSemigroup gradient_semigroup(const Skeleton& sk, const BasisFamily& family,
                                     const Anchor& y);

/// Truncated Okounkov body: exact rational hull of the scaled gradient
/// sets. Vertex and facet descriptions are cross-validated at build time.
struct OkounkovBody {
  ConvexPoly poly;
  std::vector<Halfspace> halfspaces;
  Rat volume;

  bool contains_interior(const RatVec& p) const { return poly.contains(p, true); }
  nlohmann::json to_json() const;
};

OkounkovBody okounkov_body(const GradientSemigroup& g);

struct VolumeCheckReport {
  Rat volume;
  Rat expected;  // (L^n)/n!
  Rat discrepancy;
  // |Gamma_{y,l}| / l^n per degree, the section-count proxy for the volume.
  std::vector<std::pair<int, double>> count_ratios;
};

VolumeCheckReport body_volume_check(const OkounkovBody& body, const GradientSemigroup& g,
                                    const Rat& Ln, int n);

struct IntegerPointsReport {
  bool ok = false;
  int l0 = -1;  // smallest level from which lK ∩ Z^n ⊆ Γ_{y,l} onwards
  std::vector<std::pair<int, std::vector<long long>>> missing;  // (l, point)
};

/// Checks the lattice-point property on a compact convex K strictly inside
/// the body interior. Exact.
IntegerPointsReport integer_points_check(const GradientSemigroup& g, const OkounkovBody& body,
                                         const ConvexPoly& K);

/// K scaled about its centroid; factor < 1 gives a strictly interior copy.
ConvexPoly central_scaling(const ConvexPoly& body, const Rat& factor);

enum class BodySampleScheme { lattice, centroid_cell };

/// Interior samples with weights proportional to exact clipped cell
/// volumes, normalised to total mass one.
class BodyMeasure {
 public:
  BodyMeasure() = default;

  BodySampleScheme scheme() const { return scheme_; }
  int resolution() const { return resolution_; }
  std::size_t size() const { return pts_.size(); }
  const std::vector<std::vector<double>>& points() const { return pts_; }
  const std::vector<RatVec>& points_exact() const { return pts_exact_; }
  const std::vector<double>& weights() const { return w_; }

  friend BodyMeasure body_measure(const OkounkovBody&, BodySampleScheme, int);

 private:
  BodySampleScheme scheme_ = BodySampleScheme::lattice;
  int resolution_ = 0;
  std::vector<std::vector<double>> pts_;
  std::vector<RatVec> pts_exact_;
  std::vector<double> w_;
};

/// lattice(k): bounding-box grid of spacing 1/k clipped to the body, sample
/// at the cell midpoint (centroid when the cell is cut by the boundary).
/// centroid_cell: always the clipped-cell centroid.
BodyMeasure body_measure(const OkounkovBody& body, BodySampleScheme scheme, int resolution);

}  // namespace skelot
