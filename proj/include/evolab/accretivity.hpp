#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "evolab/common.hpp"
#include "evolab/material_law.hpp"

namespace evolab {

enum class ConditionId { M2, M3, M4, PicardStrip, Md, SolveLine };
std::string to_string(ConditionId id);

/// Lines Re z = nu' (linear in nu') crossed with |Im z| on a geometric grid.
/// Refinement inserts midpoints, so a refined grid is a superset of the coarse one.
struct ScanGrid {
  double nu_lo = 0.0;
  double nu_hi = 0.0;
  int n_nu = 1;
  double t_min = 1e-3;
  double t_max = 1e4;
  int n_t = 400;
  bool negative_t = true;

  ScanGrid refined() const;
  std::vector<double> nu_values() const;
  std::vector<double> t_values() const;
  /// Default: nu' in [lo, hi], |t| up to 1e4 * max omega0.
  static ScanGrid for_law(const ScalarLaw& law, double nu_lo, double nu_hi, int n_nu = 9);
};

struct AccretivityScan {
  ConditionId condition = ConditionId::M2;
  double nu = 0.0;
  double delta = 0.0;
  ScanGrid grid;
  double c_min = std::numeric_limits<double>::infinity();
  cplx argmin = 0.0;
  /// Analytic |t| -> infinity limit appended to the grid minimum.
  double tail_limit = std::numeric_limits<double>::infinity();
  /// min(c_min, tail_limit).
  double c_certified = std::numeric_limits<double>::infinity();
  std::size_t points = 0;
  std::size_t excluded_pole_cells = 0;
  /// The minimum sits next to an excluded pole cell.
  bool grid_too_coarse = false;
};

/// Functional whose minimum certifies a condition (e.g. z -> Re z M(z)).
using ScanFunctional = std::function<double(cplx)>;

/// Minimum of f over the grid outside the closed disk |z| <= delta. Points
/// within 1e-6 of a pole are skipped and counted.
AccretivityScan accretivity_scan(const ScanFunctional& f, const std::vector<cplx>& poles, double delta,
                                 const ScanGrid& grid, ConditionId id, Exec exec = Exec::Parallel);

/// Minimum of f over an explicit point set (e.g. the solver's frequency line); points on a pole are excluded.
AccretivityScan scan_points(const ScanFunctional& f, const std::vector<cplx>& points, ConditionId id,
                            Exec exec = Exec::Parallel);

/// Condition functional for a scalar law:
///   M2: Re z eps(z);  M3: Re eps(z);  M4 and PicardStrip: Re z M(z).
ScanFunctional law_functional(const ScalarLaw& law, ConditionId id);

/// Scan of a scalar law for one condition over the strip nu' in [-nu, nu_hi].
AccretivityScan scan_law(const ScalarLaw& law, ConditionId id, double nu, double delta, const ScanGrid& grid,
                         Exec exec = Exec::Parallel);

/// Smallest eigenvalue of (B + B^*)/2.
double hermitian_min_eig(const MatC& B);

/// Evaluator of the Schur complement e00 - e01 e11^{-1} e10 of a block law.
/// The split puts the first k rows/columns in block 0.
using MatrixLaw = std::function<MatC(cplx)>;
MatrixLaw schur_effective_law(MatrixLaw law, Eigen::Index k, double cond_limit = 1e14);
/// Schur complement of a single matrix; throws BlockSingular with the condition number.
MatC schur_complement(const MatC& T, Eigen::Index k, double cond_limit = 1e14);

}  // namespace evolab
