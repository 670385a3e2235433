#pragma once

#include <functional>
#include <string>
#include <vector>

#include "skelot/cost.hpp"

namespace skelot {

/// Callable potential on the skeleton; breakpoints (1-D, per face) let sups
/// over piecewise-affine integrands be taken exactly.
using SkeletonFn = std::function<double(int face, const std::vector<double>& x)>;
using BreakpointsFn = std::function<std::vector<double>(int face)>;

/// Per-section sup norms log ||theta_alpha||_{l phi} for one degree.
struct DiagonalNorm {
  int degree = 1;
  std::vector<std::string> labels;
  std::vector<double> log_norms;
};

/// log norm = l * max_x(l^{-1} log|theta|(x) - l^{-1} log|theta|(y) - phi(x))
///           + log|theta|(y).
/// The max runs over the grid nodes, the face endpoints and, on 1-D faces,
/// the breakpoints of both the section and phi, so piecewise-affine data is
/// handled exactly.
DiagonalNorm sup_norm_diagonal(const Skeleton& sk, const DegreeBasis& basis,
                               const SkeletonFn& phi, const Anchor& anchor,
                               const SkeletonGrid& grid,
                               const BreakpointsFn& phi_breaks = nullptr);

/// Sum over sections of (log||.||_2 - log||.||_1); the diagonal relative
/// volume of the two norms.
double relative_volume(const DiagonalNorm& n1, const DiagonalNorm& n2);

struct EnergyIntegral {
  double value = 0;
  bool projected = false;  // input was not a transform fixed point and got projected
};

/// E(phi) = -(L^n) sum_j nu_j phi^c(p_j).
EnergyIntegral ma_energy_integral(const GridFunction& phi, const CostField& cf,
                                  const BodyMeasure& nu, const Rat& Ln);

struct EnergyReport {
  std::vector<std::pair<int, double>> limit_values;  // (degree, n!/l^{n+1} vol)
  std::vector<double> cauchy_gaps;                   // successive absolute differences
  double integral_diff = 0;                          // -(L^n) ∫ (phi^c - psi^c) dnu
  double final_vs_integral = 0;                      // |limit.back() - integral_diff|
};

/// Cross-checks the relative-volume limit against the body integral for a
/// pair of potentials. Raw sequence plus gaps; nothing is extrapolated.
EnergyReport energy_consistency(const SkeletonFn& phi, const BreakpointsFn& phi_breaks,
                                const SkeletonFn& psi, const BreakpointsFn& psi_breaks,
                                const BasisFamily& family, const CostField& cf,
                                const BodyMeasure& nu, const Rat& Ln,
                                const std::vector<int>& schedule, const SkeletonGrid& grid);

/// Grid-sampled variant for nodal data.
EnergyReport energy_consistency(const GridFunction& phi, const GridFunction& psi,
                                const BasisFamily& family, const CostField& cf,
                                const BodyMeasure& nu, const Rat& Ln,
                                const std::vector<int>& schedule);

}  // namespace skelot
