#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skelot/skeleton.hpp"

namespace skelot {

/// One monomial contribution to a tropicalised section: the affine function
/// x -> <p, x> - a on a face chart. Gradients are integral, shifts rational.
struct MonomialTerm {
  std::vector<long long> p;
  Rat a;
};

/// Affine discrepancy a section picks up when crossing a gluing. A section
/// value V satisfies V_from(x) = V_to(g(x)) + <dp, g(x)> - da on the glued
/// locus. Identity gluings of honest functions carry the zero twist;
/// sections of nontrivial tropical line bundles do not.
struct GluingTwist {
  std::vector<long long> dp;
  Rat da;
};

/// Tropicalised section of degree l: per-face upper envelopes of integral
/// affine functions. Convexity on each face is automatic; continuity across
/// gluings holds up to the declared twists and is checked by
/// validate_sections.
class TropicalSection {
 public:
  int degree = 1;
  std::string label;
  std::map<std::string, std::vector<MonomialTerm>> terms;  // face id -> terms
  std::map<int, GluingTwist> twists;                       // gluing index -> twist

  /// Envelope value, exact. Throws FaceMissing when the section carries no
  /// terms on the face of x.
  Rat eval_exact(const Skeleton& sk, const SkeletonPoint& x) const;
  double eval(const Skeleton& sk, int face, const std::vector<double>& x) const;

  /// Gradients of all argmax terms at y; singleton iff y avoids the
  /// section's corner locus.
  std::set<std::vector<long long>> gradients_at(const Skeleton& sk,
                                                const SkeletonPoint& y) const;

  const std::vector<MonomialTerm>* terms_on(const Skeleton& sk, int face) const;

  /// 1-D only: x-positions interior to the face where the envelope argmax
  /// changes, sorted ascending.
  std::vector<Rat> breakpoints_1d(const Skeleton& sk, int face) const;

  /// Drops every term that is strictly dominated everywhere on its face.
  /// Exact; implemented for ambient dimension <= 2.
  void prune(const Skeleton& sk);

  nlohmann::json to_json() const;
  static TropicalSection from_json(const nlohmann::json& doc);
};

/// Tropical product: value functions add, so term sets add pairwise.
TropicalSection multiply_sections(const Skeleton& sk, const TropicalSection& s1,
                                  const TropicalSection& s2);

struct DegreeBasis {
  int degree = 1;
  std::vector<TropicalSection> sections;
  bool validated = false;

  nlohmann::json to_json() const;
  static DegreeBasis from_json(const nlohmann::json& doc);
};

/// Family of bases indexed by degree.
using BasisFamily = std::map<int, DegreeBasis>;

struct Wall {
  int face = -1;
  RatVec normal;  // wall lies in {<normal, x> = offset}
  Rat offset;
  ConvexPoly piece;
};

struct Chamber {
  int face = -1;
  ConvexPoly poly;
  RatVec rep;  // rational interior representative
};

/// Subdivision of the top faces by the corner loci of every section in a
/// basis. Chambers are open convex cells on which every envelope is affine;
/// they refine the true linearity chambers when wall lines cross. Ordering
/// is lexicographic by face id then by representative.
struct WallComplex {
  int degree = 1;
  std::vector<Wall> walls;
  std::vector<Chamber> chambers;
};

WallComplex wall_complex(const Skeleton& sk, const DegreeBasis& basis);

struct IndependenceCounterexample {
  int chamber = -1;
  std::string label_a, label_b;
  std::vector<long long> gradient;
};

struct IndependenceVerdict {
  bool valid = false;
  std::optional<IndependenceCounterexample> counterexample;
  int chambers_checked = 0;
};

/// Decides the basis independence criterion: on every chamber the leading
/// gradients of all sections must be pairwise distinct. Marks the basis
/// validated on success.
IndependenceVerdict check_valuative_independence(const Skeleton& sk, DegreeBasis& basis);

/// Structural checks shared by all bases: degrees agree, terms present on
/// every top face, values glue continuously modulo declared twists, and
/// value functions agree where distinct face charts overlap.
void validate_sections(const Skeleton& sk, const DegreeBasis& basis);

/// True iff y is strictly inside a top face and lies on no wall of any
/// degree <= l_max present in the family. Exact for rational coordinates.
bool is_sufficiently_irrational(const Skeleton& sk, const SkeletonPoint& y,
                                const BasisFamily& family, int l_max);

/// Uniform slope bound: C = max over sections of max term |p|_inf / degree.
/// Degree-normalised values then satisfy |v(x) - v(x')| <= C |x - x'|_1 on
/// each face.
double lipschitz_constant(const BasisFamily& family);

}  // namespace skelot
