#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "evolab/spectral_solver.hpp"

namespace evolab {

/// Causal single-variable kernel with its derivative samples.
struct KernelSpec {
  SampledKernel kappa;
  SampledKernel kappa_prime;
  double kappa_at_0plus = 0.0;
  double rho_kappa = 0.0;
  double L_kappa = 0.0;  ///< stored value of compute_L_kappa

  /// amplitude * exp(-decay t) for t > 0.
  static KernelSpec exponential(double amplitude, double decay, const TimeGrid& grid, double rho_kappa = 0.0);
  /// sum_j Re(coeff_j exp(lambda_j t)) for t > 0, e.g. a Drude-Lorentz kernel.
  static KernelSpec from_terms(const std::vector<ExpTerm>& terms, const TimeGrid& grid, double rho_kappa = 0.0);
};

/// Trapezoid of |kappa'(s)| exp(-rho_kappa s) over the sampled lags.
double compute_L_kappa(const KernelSpec& k);

/// Scalar map applied to every edge value of a field.
using ScalarMap = std::function<cplx(cplx)>;

/// q(u) = |u|^{k-1} / (1 + tau |u|^{k-1}) u, applied per edge value.
struct SaturableQ {
  int k = 2;
  double tau = 1.0;

  void validate() const;
  cplx operator()(cplx u) const;
  /// max(1, k^2 / (4 (k - 1))) / tau, the sup of the radial profile derivative.
  double lipschitz() const;
  ScalarMap map() const;
};

/// q applied to each value of the first n_e columns; the remaining columns become zero.
WeightedSignal apply_pointwise(const ScalarMap& q, const WeightedSignal& u, Eigen::Index n_e,
                               Exec exec = Exec::Parallel);

/// P(E) = kappa * q(E) on the edge block of an (E, H) signal (H block zero).
WeightedSignal apply_P_nl(const KernelSpec& k, const ScalarMap& q, const WeightedSignal& u, Eigen::Index n_e,
                          Exec exec = Exec::Parallel);
/// d/dt P(E) = kappa(0+) q(E(t)) + (kappa' * q(E))(t).
WeightedSignal apply_dt_P_nl(const KernelSpec& k, const ScalarMap& q, const WeightedSignal& u, Eigen::Index n_e,
                             Exec exec = Exec::Parallel);

/// Low-rank multilinear form on edge fields
///   q(u_1, ..., u_n) = sum_s W_s ((L_{s,1} u_1) .* ... .* (L_{s,n} u_n)).
struct LowRankMultilinear {
  int order = 2;
  std::vector<MatR> W;               ///< n_e x r per term
  std::vector<std::vector<MatR>> L;  ///< order matrices r x n_e per term

  /// sum_s ||W_s|| prod_i ||L_{s,i}|| (spectral norms), so ||q(u..)|| <= C_q prod ||u_i||.
  double bound() const;
  VecC apply(const std::vector<VecC>& args) const;
  static LowRankMultilinear random(Eigen::Index n_e, int order, int terms, int rank, std::uint64_t seed,
                                   double scale = 1.0);
};

/// K(tau_1, ..., tau_n) = sum_p prod_i a_{p,i}(tau_i), factors sampled at lags k*dt.
struct SeparableKernel {
  double dt = 1.0;
  std::vector<std::vector<VecR>> factors;  ///< [p][i] -> samples

  int order() const { return factors.empty() ? 0 : static_cast<int>(factors.front().size()); }
  Eigen::Index rank() const { return static_cast<Eigen::Index>(factors.size()); }
  /// Rank-one exp(-decay (tau_1 + ... + tau_n)) scaled by amplitude.
  static SeparableKernel exponential(int order, double amplitude, double decay, const TimeGrid& grid);
};

struct KernelConstants {
  double L_K = 0.0;   ///< iterated trapezoid of |K| exp(-rho (tau_1 + ... + tau_n))
  double ell_K = 0.0;  ///< sup over shifts d of int |K(s, s + d)| exp(-rho (2s + d)) ds (order 2)
  double d_K = 0.0;   ///< sup |K| exp(-rho (tau_1 + ... + tau_n))
  bool exact = true;  ///< false when triangle-inequality bounds were used (order > 2, rank > 1)
};
KernelConstants kernel_constants(const SeparableKernel& K, double rho_K);

/// P(u_1..u_n)(t) = int K(t - tau_1, ..., t - tau_n) q(u_1(tau_1), ..., u_n(tau_n)) dtau
/// on edge blocks, through nested causal convolutions. The output is zeroed
/// for t > cutoff when given. Throws KernelRankTooHigh above max_rank.
WeightedSignal apply_multilinear(const SeparableKernel& K, const LowRankMultilinear& q,
                                 const std::vector<const WeightedSignal*>& args, Eigen::Index n_e,
                                 std::optional<double> cutoff = std::nullopt, Eigen::Index max_rank = 8,
                                 Exec exec = Exec::Parallel);
/// Diagonal evaluation P(E, ..., E).
WeightedSignal apply_P_multi(const SeparableKernel& K, const LowRankMultilinear& q, const WeightedSignal& u,
                             Eigen::Index n_e, std::optional<double> cutoff = std::nullopt,
                             Eigen::Index max_rank = 8, Exec exec = Exec::Parallel);

/// sqrt(T) exp((n-1) rho T) C_q sqrt(d_K L_K): the local Lipschitz factor of the
/// cutoff map per (||u|| + ||v||)^{n-1}, for signals supported in t >= 0.
double cutoff_lipschitz_constant(const KernelConstants& c, double C_q, double T, double rho, int order);

struct ContractionCertificate {
  double rho = 0.0;
  double c_min = 0.0;
  double q_lip = 0.0;
  double kappa_at_0plus = 0.0;
  double L_kappa = 0.0;
  double theoretical_bound = 0.0;
  double empirical_ratio = 0.0;
  int iterations = 0;
  bool converged = false;
  double final_residual = 0.0;
  std::vector<double> gaps;
};

/// ||q||_Lip (|kappa(0+)| + L_kappa) / c_min with c_min taken on the solve line at rho.
double picard_bound(const SpectralOperator& S, const KernelSpec& k, const SaturableQ& q);

struct PicardOptions {
  double tol = 1e-10;
  int max_iter = 200;
  SolverOptions solver;
};

/// Fixed point u = S_rho(g - (d/dt P(E_u), 0)) started from S_rho g. Throws
/// NotAContraction when the bound is >= 1 (with the rho where it is 0.5) and
/// MaxIterExceeded when the gap does not fall below tol.
std::pair<WeightedSignal, ContractionCertificate> picard_solve(const LinearProblem& p, const KernelSpec& k,
                                                               const SaturableQ& q, PicardOptions opt = {});

/// Weight at which picard_bound equals target, by bisection on [rho_lo, rho_hi].
double rho_for_bound(const LinearProblem& p, const KernelSpec& k, const SaturableQ& q, double target = 0.5,
                     double rho_lo = 1e-3, double rho_hi = 1e4, SolverOptions opt = {});

/// Relative L2 gap of the fixed points at rho1 and rho2 on the common window
/// (equal rho*T budgets, as in verify_rho_independence).
double picard_rho_independence(const LinearProblem& p, const KernelSpec& k, const SaturableQ& q, double rho1,
                               double rho2, PicardOptions opt = {});

/// Causal nonlinear source N acting on (E, H) signals.
using NonlinearMap = std::function<WeightedSignal(const WeightedSignal&)>;

struct BallOptions {
  /// Ball radius; <= 0 selects (1/2) (1 / (2 K C))^{1/alpha}.
  double radius = 0.0;
  double alpha = 1.0;
  double tol = 1e-10;
  int max_iter = 200;
};

struct BallCertificate {
  double weight = 0.0;
  double K = 0.0;  ///< solution operator norm bound
  double C = 0.0;  ///< local Lipschitz factor: ||N u - N v|| <= C (||u|| + ||v||)^alpha ||u - v||
  double alpha = 1.0;
  double radius = 0.0;
  double eps0 = 0.0;  ///< 1 / (4 K C)
  double c0 = 0.0;    ///< 1 / (4 K)
  double data_norm = 0.0;
  double contraction_factor = 0.0;  ///< K C (2 radius)^alpha
  int iterations = 0;
  bool converged = false;
  std::vector<double> norms;
  std::vector<double> gaps;
};

/// Fixed point u = S(g - N(u)) with every iterate checked against the ball of
/// the chosen radius in the operator's weighted norm. Throws BallEscape.
std::pair<WeightedSignal, BallCertificate> ball_solve(const SpectralOperator& S, const WeightedSignal& g,
                                                      const NonlinearMap& N, double K, double C,
                                                      BallOptions opt = {});

}  // namespace evolab
