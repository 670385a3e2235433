#pragma once

#include <optional>
#include <string>
#include <vector>

#include "skelot/skeleton.hpp"
#include "skelot/tropical.hpp"

namespace skelot {

/// Closed-form cost description attached to built-in models. Costs factor
/// over coordinates; each 1-D component is either globally affine
/// (c = p (x - y)) or the circle-quotient form with quadratic parameter q.
struct CostForm {
  enum class Comp { affine, circle };
  std::vector<Comp> comp;
  std::vector<Rat> q;  // valid entries where comp[d] == circle
};

struct ModelSpec {
  enum class Kind { monomial, tate_circle, torus_product, random_basis };
  Kind kind = Kind::monomial;

  int n = 1;
  Rat Ln = 1;

  Rat q = Rat(1, 2);  // tate_circle quadratic coefficient, must be 1/(2k)

  std::vector<ModelSpec> components;  // torus_product

  uint64_t seed = 1;
  long long term_budget = 10000;
  bool single_term = false;  // random_basis: pure single-term sections

  int l_max = 12;
  /// Extra margin for the circle-model term window; certified a posteriori.
  Rat window_margin = 10;

  /// Text form, e.g. "monomial(1)", "tate(1/2)", "random(2,6,7,10000)",
  /// "product(tate(1/2),monomial(1))"; "lmax=K" may follow the arguments.
  static ModelSpec parse(const std::string& text);
  std::string str() const;
};

/// Instantiated desk-scale model: validated bases plus optional closed-form
/// cost data.
struct Model {
  std::string name;
  Skeleton skeleton;
  BasisFamily bases;
  Rat Ln = 1;
  std::optional<CostForm> closed_form;
  uint64_t seed = 0;
  std::vector<int> degrees;  // materialised degrees, ascending

  /// Deterministic anchor well inside the first top face and off every wall
  /// up to l_max.
  SkeletonPoint default_anchor(int l_max) const;
};

/// Materialises the skeleton and the basis family. Every generated degree
/// passes the independence check; the random generator reseeds until it
/// does or the term budget runs out.
Model instantiate(const ModelSpec& spec);

/// Degrees materialised at a given cap: 1..min(12, l_max) plus powers of
/// two up to l_max.
std::vector<int> default_degrees(int l_max);

struct Transport1D {
  std::vector<int> order;            // atom indices sorted by p
  std::vector<double> boundaries;    // cell boundaries, increasing, size atoms+1
  double cost_value = 0;             // sup-form optimal functional value
};

/// Monotone-rearrangement solution of the 1-D semi-discrete problem with
/// cost c(x,p) = p (x - y): cell boundaries by cumulative-mass inversion.
Transport1D oracle_1d_transport(const SkeletonMeasure& mu, int face,
                                const std::vector<double>& atoms_p,
                                const std::vector<double>& atoms_w, double y);

}  // namespace skelot
