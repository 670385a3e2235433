#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "skelot/cost.hpp"

namespace skelot {

/// Kantorovich weights on the body samples, gauge-fixed to min = 0.
struct DualWeights {
  std::vector<double> psi;

  void gauge() {
    if (psi.empty()) return;
    double m = psi[0];
    for (double v : psi) m = std::min(m, v);
    for (double& v : psi) v -= m;
  }
};

/// phi(x) = max_j (c(x, p_j; y) - psi_j). Convex on each top face,
/// Lipschitz bounded by the cost constant, and a fixed point of the double
/// transform on the sample set.
class PotentialPc {
 public:
  PotentialPc(const CostField& cf, const BodyMeasure& samples, std::vector<double> psi);

  const CostField& cost() const { return *cf_; }
  const BodyMeasure& samples() const { return *samples_; }
  const std::vector<double>& weights() const { return w_.psi; }
  void set_weights(std::vector<double> psi);

  double eval(int face, const std::vector<double>& x) const;
  /// Winning sample index; ties resolve to the lowest index.
  int argmax(int face, const std::vector<double>& x) const;
  std::pair<double, int> eval_argmax(int face, const std::vector<double>& x) const;
  /// Gap between the best and second-best branch (multi-conjugacy proxy).
  double top_gap(int face, const std::vector<double>& x) const;

 private:
  const CostField* cf_;
  const BodyMeasure* samples_;
  DualWeights w_;
};

/// Exact 1-D winner piece: branch `sample` rules [lo,hi], where
/// phi(x) = slope * x + intercept.
struct CellPiece1D {
  int face = -1;
  double lo = 0, hi = 0;
  int sample = -1;
  double slope = 0;
  double intercept = 0;
};

struct LaguerreCell {
  int sample = -1;
  double mass = 0;
  std::vector<std::pair<double, double>> intervals;  // n = 1 exact method
  std::vector<PolyD> polys;                          // n = 2 exact method
};

struct LaguerreDecomposition {
  std::vector<LaguerreCell> cells;  // one per sample, in sample order
  std::string method;               // "exact-1d", "exact-2d", "grid"
  double mass_sum = 0;
  std::vector<CellPiece1D> pieces;  // populated by the exact 1-D method
  /// ∫ phi dmu, exact for the exact methods, quadrature otherwise.
  double integral_phi = std::numeric_limits<double>::quiet_NaN();
};

/// Cell decomposition by argmax with deterministic tie-breaking. Masses by
/// exact clipping for costs affine in x (n <= 2) and for every closed-form
/// cost on 1-D skeletons; grid quadrature otherwise (pass a grid for that
/// path and for half-weight tie handling).
LaguerreDecomposition laguerre_cells(const PotentialPc& pot, const SkeletonMeasure& mu,
                                     const SkeletonGrid* grid = nullptr);

/// F_mu(phi) = sum_j nu_j psi_j + ∫ phi dmu.
double functional_F(const PotentialPc& pot, const SkeletonMeasure& mu, const BodyMeasure& nu,
                    const SkeletonGrid* grid = nullptr);

struct SolveOptions {
  double tol = 1e-6;
  int max_iter = 5000;
  double grid_h = 1.0 / 256;         // quadrature resolution for grid paths
  bool force_grid_masses = false;    // diagnostic: skip the exact cell paths
  bool accelerate = true;            // momentum with restart on non-decrease
  std::optional<std::vector<double>> warm_start;
};

struct TransportCertificate {
  double residual_inf = std::numeric_limits<double>::infinity();
  double functional_value = 0;
  int iterations = 0;
  bool converged = false;
  std::string method;
  double grid_h = 0;
  double gauge = 0;
  /// mu-mass within cost-Lipschitz * h of a cell boundary (multi-conjugate
  /// collar at the certificate grid resolution).
  double null_set_fraction = 0;
};

/// Damped ascent on the dual weights with a backtracking line search on the
/// primal functional; the functional is non-increasing across accepted
/// steps. Returns the best iterate flagged unconverged when max_iter is hit.
std::pair<PotentialPc, TransportCertificate> solve_kantorovich(const SkeletonMeasure& mu,
                                                               const BodyMeasure& nu,
                                                               const CostField& cf,
                                                               const SolveOptions& opts = {});

/// Axis box inside one face chart.
struct RegionBox {
  int face = -1;
  std::vector<double> lo, hi;
};

/// Indices of samples whose cell meets the region (exact cells when the
/// decomposition carries them, else grid detection).
std::vector<int> conjugate_set_forward(const std::vector<RegionBox>& region,
                                       const LaguerreDecomposition& cells,
                                       const PotentialPc& pot, const SkeletonGrid* grid = nullptr);

struct GlobalMAReport {
  struct ForwardRow {
    double nu_conjugate = 0;  // nu(conjugate set of E)
    double mu_E = 0;
    double collar = 0;  // mu(cell closure of E \ E): boundary-cell overshoot
  };
  struct ReverseRow {
    double mu_conjugate = 0;  // mu(cells of F)
    double nu_F = 0;
  };
  std::vector<ForwardRow> forward;
  std::vector<ReverseRow> reverse;
  double max_forward_discrepancy = 0;  // max |nu(conj E) - mu(E)| - collar, clamped at 0
  double max_reverse_discrepancy = 0;  // max |mu(conj F) - nu(F)|
};

/// Measure-preservation audit on random boxes E and random sample subsets
/// F. Both directions are compared at the stated boundary collar.
GlobalMAReport verify_global_ma(const PotentialPc& pot, const SkeletonMeasure& mu,
                                const BodyMeasure& nu, const LaguerreDecomposition& cells,
                                int trials, uint64_t seed);

struct ComparisonPointReport {
  SkeletonPoint point;
  bool wall_free = false;        // sufficiently irrational at l_max
  bool unique_gradient = false;
  bool gradient_interior = false;  // gradient inside the body interior at the point
  bool affine_domain_found = false;
  bool pass = false;
};

struct ComparisonReport {
  int tested = 0;
  int passed = 0;
  double pass_fraction = 0;
  double wall_collar_mass = 0;  // mu-mass within collar_h of any wall, degrees <= l_max
  int l_max = 0;
  std::vector<ComparisonPointReport> points;
};

/// Pointwise factorisation certificate at seeded wall-free sample points:
/// unique potential gradient, exact body-interior membership at the point,
/// and a full-dimensional affinity domain around it.
ComparisonReport comparison_certificate(const PotentialPc& pot, const Model& model,
                                        const SkeletonMeasure& mu, int l_max, int npoints,
                                        uint64_t seed, double collar_h = 1e-3);

struct RealMA1DReport {
  double max_discrepancy = 0;
  int intervals_checked = 0;
};

/// Alexandrov check on a dyadic interval family: the gradient-image length
/// of phi over [a,b], normalised by (L), against mu([a,b]).
RealMA1DReport real_ma_check_1d(const PotentialPc& pot, const SkeletonMeasure& mu, const Rat& Ln,
                                int dyadic_depth = 6);

}  // namespace skelot
