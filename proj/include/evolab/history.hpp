#pragma once

#include <memory>
#include <optional>

#include "evolab/nonlinear.hpp"

namespace evolab {

/// Prescribed (E, H) history on [-T_h, 0], zero-extended further left.
struct HistorySpec {
  WeightedSignal phi;  ///< last row at t = 0
  VecC phi_at_0minus;
  std::optional<VecC> dphi_at_0minus;
  bool zero_extended = true;

  /// Takes phi(0-) from the last row; the derivative, if requested, from the
  /// one-sided second-order difference of the last three rows.
  static HistorySpec from_samples(const WeightedSignal& phi, bool with_derivative = false);
  /// Throws InvalidArgument unless the last sample sits at t = 0 and equals phi_at_0minus.
  void validate() const;
};

/// Jump-smoothing profiles on [0, support]:
///   eta(t) = (1 - (t/s)^2)^3, gamma(t) = t (1 - (t/s)^2)^3.
struct BumpSpec {
  double support = 1.0;
  bool use_gamma = true;

  /// support is raised to at least 10 dt.
  static BumpSpec polynomial(double support, double dt, bool use_gamma = true);
  double eta(double t) const;
  double eta_prime(double t) const;
  double gamma(double t) const;
  double gamma_prime(double t) const;
  /// Throws InvalidArgument if eta(0) = 1, eta'(0) = 0, gamma(0) = 0, gamma'(0) = 1
  /// fail to 1e-10 when checked by central differences at step dt.
  void validate(double dt) const;
};

/// Memory nonlinearity P(E) = kappa * q(E) carried by a history problem.
struct MemoryNonlinearity {
  KernelSpec kernel;
  SaturableQ q;
};

/// Six decay lengths of the slowest kernel term of either law.
double default_history_window(const PiecewiseMaterial& m);
/// Largest integral of |kernel| beyond T_h over the two laws, the truncation error of a finite history.
double kernel_tail_mass(const PiecewiseMaterial& m, double T_h);

/// phi+ = phi(0-) eta + dphi(0-) gamma sampled on grid for t > 0, zero elsewhere.
WeightedSignal smooth_jump(const HistorySpec& h, const BumpSpec& b, const TimeGrid& grid, double rho);

/// g = -[d/dt(M0 phi+ + G(phi + phi+)) + (A + sigma) phi+] for t > 0, zero for t <= 0, the
/// right-hand side of (d/dt M + A) u_tilde = g for the linear part of the law.
/// M0 = diag(eps0_e, mu_f); G is the memory response to the zero-extended history,
/// including kappa * q(E0) when nl is given. The grid must share dt with the history
/// and contain t = 0.
WeightedSignal build_g_phi(const HistorySpec& h, const BumpSpec& b, const OperatorBundle& bundle,
                           const PiecewiseMaterial& m, const TimeGrid& grid, double rho,
                           const MemoryNonlinearity* nl = nullptr);

struct MaxwellInhomogeneity {
  WeightedSignal Phi;  ///< edge block
  WeightedSignal Psi;  ///< face block
  WeightedSignal phi_plus;
  /// ||D(mu H0(0-))|| over interior cells.
  double div_mu_H0_interior = 0.0;
  /// ||mu H0(0-)|| on boundary faces (normal trace).
  double boundary_normal_trace = 0.0;
};

/// Phi and Psi of the (E, H) system. With a nonlinearity, Phi is shifted by
/// -d/dt(kappa * q(E0+)) so that the map returned by shifted_nonlinearity vanishes at zero.
MaxwellInhomogeneity build_maxwell_inhomogeneity(const HistorySpec& h, const BumpSpec& b,
                                                 const OperatorBundle& bundle, const PiecewiseMaterial& m,
                                                 const TimeGrid& grid, double rho,
                                                 const MemoryNonlinearity* nl = nullptr);

/// u -> (d/dt[kappa * q(E_u + E0+)] - d/dt[kappa * q(E0+)], 0).
NonlinearMap shifted_nonlinearity(const MemoryNonlinearity& nl, const WeightedSignal& phi_plus, Eigen::Index n_e);

/// ||d/dt M(phi)(0-) + (A + sigma) phi(0)||, with the memory term taken from the history.
double check_compatibility(const HistorySpec& h, const OperatorBundle& bundle, const PiecewiseMaterial& m,
                           const MemoryNonlinearity* nl = nullptr);

/// U = phi on t <= 0 (copied from the history, zero before it) and u_tilde + phi+ on t > 0.
WeightedSignal reconstruct_solution(const WeightedSignal& u_tilde, const HistorySpec& h,
                                    const WeightedSignal& phi_plus);

}  // namespace evolab
