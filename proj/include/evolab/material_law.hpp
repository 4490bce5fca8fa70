#pragma once

#include <limits>
#include <string>
#include <vector>

#include "evolab/common.hpp"
#include "evolab/weighted_signal.hpp"

namespace evolab {

/// One damped-oscillator term alpha / (omega0^2 + z^2 + 2 gamma z).
struct DLTerm {
  double alpha = 0.0;
  double gamma = 0.0;
  double omega0 = 0.0;
};

struct DrudeLorentzParams {
  double eps0 = 1.0;
  std::vector<DLTerm> terms;

  void validate() const;
  double max_omega0() const;
};

/// Modified law eps0 + chi(z) (1 + (z - z0)/r).
struct ModDLParams {
  DrudeLorentzParams base;
  double r = 1.0;
  cplx z0 = 0.0;

  /// 2 gamma r - omega0^2 > 0 for every term.
  bool strictly_accretive() const;
};

/// Roots of omega0^2 + z^2 + 2 gamma z.
std::vector<cplx> dl_term_poles(const DLTerm& term);

/// Susceptibility sum; throws PoleHit within 1e-14 (relative) of a root.
cplx eval_chi_dl(cplx z, const DrudeLorentzParams& p);
/// M_r(z) = eps0 + chi(z) (1 + (z - z0)/r).
cplx mod_dl_eval(cplx z, const ModDLParams& p);

/// Samples of theta(t) sum a_j exp(-gamma_j t) sin(b_j t) at lags k*dt, k < grid.n.
/// Throws OverdampedUnsupported when omega0 <= gamma for some term.
SampledKernel dl_time_kernel(const DrudeLorentzParams& p, const TimeGrid& grid);

/// eps0 nu + sum_j [alpha nu (w^2 + nu^2 + t^2 + 2 g nu) + 2 alpha g t^2] / den_j.
double re_zM_closed_form(double nu, double t, const DrudeLorentzParams& p);
/// Re((nu+it) M_r(nu+it)) - eps0 nu by complex arithmetic.
double mod_dl_g(double nu, double t, const ModDLParams& p);
/// The displayed rational form of mod_dl_g, summed over terms (requires z0 = 0).
double mod_dl_g_closed_form(double nu, double t, const ModDLParams& p);

enum class LawModel { DL, ModDL, DLSigma };

std::string to_string(LawModel m);
LawModel law_model_from_string(const std::string& s);

/// Time-domain piece Re(coeff * exp(lambda t)) for t > 0.
struct ExpTerm {
  cplx lambda;
  cplx coeff;
};

/// Scalar material law M(z) = eps(z) + sigma / z, where eps(z) = eps0 + chi(z)
/// with the optional (1 + (z - z0)/r) factor on chi.
struct ScalarLaw {
  LawModel model = LawModel::DL;
  DrudeLorentzParams dl;
  double r = std::numeric_limits<double>::infinity();
  cplx z0 = 0.0;
  double sigma = 0.0;

  static ScalarLaw drude_lorentz(const DrudeLorentzParams& p);
  static ScalarLaw modified(const ModDLParams& p);
  /// Memoryless eps0 (no susceptibility terms).
  static ScalarLaw instantaneous(double eps0);
  /// Like DrudeLorentzParams::validate but an empty term list is allowed.
  void validate() const;

  double eps0() const { return dl.eps0; }
  /// chi(z) including the modification factor.
  cplx susceptibility(cplx z) const;
  cplx eps(cplx z) const { return dl.eps0 + susceptibility(z); }
  /// z * M(z) = z eps(z) + sigma, analytic at z = 0.
  cplx z_times(cplx z) const { return z * eps(z) + sigma; }
  cplx eval(cplx z) const { return eps(z) + sigma / z; }
  /// z * chi(z) + sigma, the memory part in M = eps0 + M1(z)/z.
  cplx memory_part(cplx z) const { return z * susceptibility(z) + sigma; }

  std::vector<cplx> poles() const;
  double max_omega0() const { return dl.max_omega0(); }
  /// lim_{|t|->inf} Re((nu+it) M(nu+it)).
  double re_zM_tail_limit(double nu) const;
  /// Memory kernel split into exponential pieces; kernel(0+) is the sum of Re(coeff).
  std::vector<ExpTerm> kernel_terms() const;
  double kernel_at_0plus() const;
};

/// Adds z^{-1} sigma to a law.
ScalarLaw conductivity_law(const ScalarLaw& eps_law, double sigma);

/// Two-medium law; region 1 holds the cells below the interface plane.
struct PiecewiseMaterial {
  ScalarLaw law1;
  ScalarLaw law2;
  double mu1 = 1.0;
  double mu2 = 1.0;

  void validate() const;
};

}  // namespace evolab
