#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evolab/accretivity.hpp"
#include "evolab/nonlinear.hpp"

namespace evolab {

/// Block law of the shifted second-order system, with M = M0 + M1(z)/z,
/// M0 = eps0 and M1(z) = z chi(z) + sigma per region:
///   z M_d(z) = [[z M(z) - d M0, d (M1(z) - d M0) C^{-1}], [0, z + d]].
/// C^{-1} enters through its norm 1/sigma_C; both regions are bounded jointly.
struct MdSystem {
  ScalarLaw law1;
  ScalarLaw law2;
  double sigma_C = 1.0;  ///< smallest singular value of the reduced curl
  double d = 0.0;

  /// 2x2 M_d(z) for one region (0 or 1), with C^{-1} replaced by 1/sigma_C.
  MatC eval(cplx z, int region) const;
  /// Lower bound of Re <z M_d(z) x, x> / |x|^2 valid for every edge mixture.
  double accretivity_bound(cplx z) const;
  /// Upper bound of ||z M_d(z)||.
  double norm_bound(cplx z) const;
};
MdSystem build_Md(const PiecewiseMaterial& m, double sigma_C, double d);

struct SchurMargins {
  double herm_min = 0.0;      ///< lambda_min of Herm(T)
  double margin11 = 0.0;      ///< lambda_min of Herm(T11)
  double margin_schur = 0.0;  ///< lambda_min of Herm(T00 - T01 T11^{-1} T10)
};
/// Block 0 is the leading k x k block. Throws BlockSingular when T11 is singular.
SchurMargins schur_accretivity_check(const MatC& T, Eigen::Index k);

/// lambda_min of V^T C face_weight C0 V on ran(C), V the orthonormal basis of ran(C).
/// Throws InvalidArgument for a non-positive weight.
double projection_invertibility_check(const OperatorBundle& b, const ProjectionBasis& p, const VecR& face_weight);
/// sigma_min of mu^{-1/2} C0 on ker(C0)^perp.
double reduced_curl_sigma(const OperatorBundle& b, const ProjectionBasis& p, const PiecewiseMaterial& m);

struct CertifyOptions {
  /// Disk radius around the origin; <= 0 tries radii from 2 down to 1/4 of sigma_C / max_r |eps_r(0)|.
  double delta = 0.0;
  double nu_max = 2.0;
  double nu_top = 4.0;  ///< upper edge of the scanned strip
  int n_nu = 5;
  int n_t = 240;
  int bisection_steps = 20;
  Exec exec = Exec::Parallel;
};

enum class DecayRoute { None, Md, Conductivity };
std::string to_string(DecayRoute r);

struct DecayCertificate {
  bool certified = false;
  DecayRoute route = DecayRoute::None;
  double nu0 = 0.0;
  double d = 0.0;
  double delta = 0.0;
  double c_min = 0.0;      ///< strip margin at nu0
  double disk_norm = 0.0;  ///< sup ||z M_d(z)|| on the disk at nu0
  double sigma_C = 0.0;
  std::string reason;
};

/// Strip margin and disk norm of the M_d route at decay rate nu for a given d.
struct MdCheck {
  double c_min = 0.0;
  double disk_norm = 0.0;
  bool passes = false;
};
MdCheck check_Md(const MdSystem& md, double nu, double delta, const CertifyOptions& opt);
/// d in (nu, d_max] maximizing the strip margin (golden section).
double choose_d(const PiecewiseMaterial& m, double sigma_C, double nu, double delta, const CertifyOptions& opt);

/// Largest decay rate with an M_d certificate, by bisection. Laws with a conductivity in
/// both regions must first satisfy Re z M(z) >= c on a strip; that alone does not fix a rate.
DecayCertificate certify_decay(const PiecewiseMaterial& m, double sigma_C, CertifyOptions opt = {});

struct DecayFit {
  double t_lo = 0.0;
  double t_hi = 0.0;
  double nu_hat = 0.0;
  double intercept = 0.0;  ///< log amplitude at t = 0
  double r2 = 0.0;
  double dominance = 0.0;  ///< max over t >= t_lo of e(t) exp(nu_hat t - intercept)
  VecR times;
  VecR energy;  ///< unweighted spatial L2 norm per sample
};
/// Least squares of log(energy) on [t_lo, t_hi].
DecayFit fit_decay(const VecR& times, const VecR& energy, double t_lo, double t_hi);

struct DivergenceFreeData {
  WeightedSignal Phi;  ///< C times a random face field
  WeightedSignal Psi;  ///< C0 times a random edge field
  double div_Phi = 0.0;  ///< max_t ||G0^T Phi(t)||
  double pi0_Phi = 0.0;  ///< max_t ||Pi0 Phi(t)||
  double pi1_Psi = 0.0;  ///< max_t ||Pi1 Psi(t)||
  double t_on = 0.0;
  double duration = 0.0;
};
/// Spatial profiles modulated by sin^4 on [t_on, t_on + duration].
DivergenceFreeData make_divergence_free_data(const OperatorBundle& b, const ProjectionBasis& p, const TimeGrid& grid,
                                             double rho, std::uint64_t seed, double t_on = 0.0,
                                             double duration = 2.0);

struct DecayOptions {
  SymbolKind symbol = SymbolKind::Exact;
  /// Fit window ends where the weighted energy falls below floor times its peak.
  double floor = 1e-4;
  /// Fit window starts this many source durations after switch-off.
  double lag_durations = 2.0;
  /// The exact symbol leaves an aliasing floor near 1e-6 relative.
  double wrap_tol = 1e-5;
};

struct DecayRun {
  double nu = 0.0;
  DecayFit fit;
  SolveReport report;
  WeightedSignal solution;
};

/// Solves at weight -nu for each nu and fits the post-source envelope.
/// Throws NotCertified when the certificate is missing or nu >= nu0.
std::vector<DecayRun> simulate_decay(std::shared_ptr<const OperatorBundle> b, const PiecewiseMaterial& m,
                                     const DecayCertificate& cert, const DivergenceFreeData& data,
                                     const std::vector<double>& nu_list, DecayOptions opt = {});

struct EstimateRow {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
};
/// The four first-order estimates at the solution's weight:
///   ||E|| vs ||g|| + ||h||,  ||H|| vs ||g|| + ||Phi|| + ||w||,
///   ||dE|| vs ||g|| + ||Phi||,  ||dH|| vs ||g|| + ||Psi||,
/// with g = dPhi + C mu^{-1} Psi, h = Pi0 d^{-1} Phi, w = Pi1 d^{-1} Psi.
std::vector<EstimateRow> verify_first_order_estimates(const OperatorBundle& b, const ProjectionBasis& p,
                                                      const PiecewiseMaterial& m, const WeightedSignal& solution,
                                                      const WeightedSignal& Phi, const WeightedSignal& Psi);

/// Largest gain of the per-frequency inverses on inputs in ran(C) x ran(C0).
struct RestrictedGain {
  double gain = 0.0;
  Eigen::Index frequency = 0;
  VecC direction;  ///< unit input in ran(C) x ran(C0)
};
RestrictedGain restricted_gain(const SpectralOperator& S, const ProjectionBasis& p, int iterations = 20);

/// envelope(t) exp((rho + i xi_m) t) v with a sin^4 envelope on [t_on, t_on + duration].
WeightedSignal aligned_data(const SpectralOperator& S, const RestrictedGain& g, double t_on, double duration);

/// u -> (beta Pi_ranC(|E| E), 0): a divergence-free source with
/// ||N u - N v|| <= C (||u|| + ||v||) ||u - v||.
NonlinearMap projected_quadratic_source(const ProjectionBasis& p, Eigen::Index n_e, double beta);
/// beta sqrt(2/dt) exp(nu max(0, -t_start)), the constant of projected_quadratic_source
/// in the weighted trapezoid norm at weight -nu.
double projected_quadratic_constant(double beta, const TimeGrid& grid, double nu);
/// max over random pairs of ||N u - N v|| / ((||u|| + ||v||)^alpha ||u - v||).
double empirical_local_lipschitz(const NonlinearMap& N, const WeightedSignal& like, int pairs, double scale,
                                 double alpha, std::uint64_t seed);

struct CapabilityRow {
  std::string name;
  bool wp0 = false;
  bool es0 = false;
  double c_min = 0.0;      ///< forward scan certificate
  double norm_ratio = 0.0;  ///< ||S g|| / ||g|| on the forward solve
  double nu0 = 0.0;
  double nu_hat = 0.0;
  double r2 = 0.0;
  std::string note;
};
struct CapabilityCase {
  std::string name;
  PiecewiseMaterial material;
};
struct CapabilityOptions {
  YeeGrid grid;
  double rho = 1.0;
  std::uint64_t seed = 7;
  double dt = 0.1;
  Eigen::Index n = 1024;
};
/// DL, modified DL and DL with conductivity on a homogeneous box.
std::vector<CapabilityCase> default_battery();
std::vector<CapabilityRow> capability_matrix(const std::vector<CapabilityCase>& battery,
                                             const CapabilityOptions& opt = {});
std::string format_capability_table(const std::vector<CapabilityRow>& rows);

}  // namespace evolab
