#pragma once

#include <Eigen/SparseLU>
#include <memory>
#include <vector>

#include "evolab/discrete_operators.hpp"
#include "evolab/material_law.hpp"
#include "evolab/weighted_signal.hpp"

namespace evolab {

/// Symbol substituted for the time derivative at s = rho + i xi.
///   Bilinear: (2/dt) (1 - e^{-s dt}) / (1 + e^{-s dt}), the trapezoid rule in time.
///   Exact:    s itself.
enum class SymbolKind { Bilinear, Exact };

/// Derivative symbols on the DFT dual grid of g at weight rho, in FFT order.
VecC solver_symbols(const TimeGrid& g, double rho, SymbolKind kind);

struct SolverOptions {
  SymbolKind symbol = SymbolKind::Bilinear;
  double cond_limit = 1e14;
  double residual_tol = 1e-10;
  bool estimate_condition = true;
  /// Keep one sparse LU per frequency for repeated applications.
  bool cache_factors = false;
  /// Tolerance attached to the returned solution (kNoWrapCheck disables the check).
  double wrap_tol = kDefaultWrapTol;
  Exec exec = Exec::Parallel;
};

struct SolveReport {
  double rho = 0.0;
  VecR condition;  ///< 1-norm condition estimate per frequency (empty if not estimated)
  double max_condition = 0.0;
  double max_residual = 0.0;
  /// Certified lower bound of Re <z M(z) u, u> on the solve line.
  double c_min = 0.0;
  double norm_ratio = 0.0;  ///< ||u||_rho / ||g||_rho
  double wrap_residual = 0.0;
};

struct LinearProblem {
  std::shared_ptr<const OperatorBundle> bundle;
  PiecewiseMaterial material;
  double rho = 1.0;
  WeightedSignal rhs;  ///< columns: edge dofs then face dofs
};

/// Per-frequency realization of (z M(z) + A)^{-1} on a fixed time grid and weight.
/// On edge e: z eps_e(z) + sigma_e with eps_e the region-weighted average; on face f: z mu_f.
class SpectralOperator {
 public:
  SpectralOperator(std::shared_ptr<const OperatorBundle> bundle, const PiecewiseMaterial& material, double rho,
                   const TimeGrid& grid, SolverOptions opt = {});

  /// u = S g for a signal on the operator's grid and weight.
  WeightedSignal apply(const WeightedSignal& g, SolveReport* report = nullptr) const;
  /// Frequency-domain solve; values row m is solved with symbol m.
  MatC apply_spectral(const MatC& g_hat, SolveReport* report = nullptr) const;

  /// Sparse matrix z M(z) + A for symbol index m.
  SpMatC matrix(Eigen::Index m) const;
  const VecC& symbols() const { return symbols_; }
  const TimeGrid& grid() const { return grid_; }
  double rho() const { return rho_; }
  const OperatorBundle& bundle() const { return *bundle_; }
  const PiecewiseMaterial& material() const { return material_; }
  const SolverOptions& options() const { return opt_; }

  /// min over the solve line of the smallest Hermitian-part eigenvalue of z M(z).
  double line_c_min() const;
  /// max_m ||(z_m M(z_m) + A)^{-1}||_2 by inverse power iteration.
  double inverse_norm_max(int iterations = 30) const;

 private:
  using LU = Eigen::SparseLU<SpMatC, Eigen::COLAMDOrdering<int>>;
  std::shared_ptr<LU> factor(Eigen::Index m, double* cond) const;
  VecC solve_one(Eigen::Index m, const VecC& b, double* cond, double* residual) const;

  std::shared_ptr<const OperatorBundle> bundle_;
  PiecewiseMaterial material_;
  double rho_;
  TimeGrid grid_;
  SolverOptions opt_;
  VecC symbols_;
  mutable std::vector<std::shared_ptr<LU>> cache_;
  mutable std::vector<double> cache_cond_;
};

/// Edge-wise z eps_e(z) + sigma_e and face-wise z mu_f.
VecC edge_symbol(const OperatorBundle& b, const PiecewiseMaterial& m, cplx z);
VecC face_symbol(const OperatorBundle& b, const PiecewiseMaterial& m, cplx z);

/// S_rho g via a fresh SpectralOperator; fills the report.
WeightedSignal solve_linear(const LinearProblem& p, SolveReport* report = nullptr, SolverOptions opt = {});

/// max_{t <= a} |u(t)| / max_t |u(t)| for the solution with data truncated to t > a.
double verify_causality(const LinearProblem& p, double a, SolverOptions opt = {});

/// Relative L2 gap between the solutions at rho1 and rho2 on their common window.
/// Each weight gets a window of equal rho*T budget, so the larger weight uses a
/// proportionally shorter prefix of the data grid.
double verify_rho_independence(const LinearProblem& p, double rho1, double rho2, SolverOptions opt = {});

/// ||S(d/dt g) - d/dt S g||_rho / ||d/dt S g||_rho with spectral time derivatives.
double verify_time_regularity(const LinearProblem& p, SolverOptions opt = {});

/// Multiplies the transform by rho + i xi.
WeightedSignal spectral_derivative(const WeightedSignal& u, Exec exec = Exec::Parallel);

/// Second-order form (z^2 eps(z) + z sigma + C mu^{-1} C0) E = z Phi + C mu^{-1} Psi.
struct EFieldProblem {
  std::shared_ptr<const OperatorBundle> bundle;
  PiecewiseMaterial material;
  double rho = 1.0;
  WeightedSignal phi;  ///< edge dofs
  WeightedSignal psi;  ///< face dofs
};
WeightedSignal second_order_solve(const EFieldProblem& p, SolverOptions opt = {});

/// Concatenates edge and face signals into an (E, H) signal.
WeightedSignal stack_fields(const WeightedSignal& e, const WeightedSignal& h);
/// Column block [first, first+count) of a signal.
WeightedSignal field_block(const WeightedSignal& u, Eigen::Index first, Eigen::Index count);

}  // namespace evolab
