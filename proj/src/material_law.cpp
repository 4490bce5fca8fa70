#include "evolab/material_law.hpp"

#include <algorithm>
#include <cmath>

namespace evolab {

void DrudeLorentzParams::validate() const {
  if (!(eps0 > 0.0) || !std::isfinite(eps0)) throw InvalidArgument("eps0 must be positive and finite");
  if (terms.empty()) throw InvalidArgument("Drude-Lorentz law needs at least one term");
  for (const auto& t : terms) {
    if (!(t.alpha > 0.0) || !(t.gamma > 0.0) || !(t.omega0 >= 0.0) || !std::isfinite(t.alpha) ||
        !std::isfinite(t.gamma) || !std::isfinite(t.omega0)) {
      throw InvalidArgument("Drude-Lorentz term needs alpha > 0, gamma > 0, omega0 >= 0");
    }
  }
}

double DrudeLorentzParams::max_omega0() const {
  double m = 0.0;
  for (const auto& t : terms) m = std::max(m, t.omega0);
  return m;
}

bool ModDLParams::strictly_accretive() const {
  return std::all_of(base.terms.begin(), base.terms.end(),
                     [&](const DLTerm& t) { return 2.0 * t.gamma * r - t.omega0 * t.omega0 > 0.0; });
}

std::vector<cplx> dl_term_poles(const DLTerm& t) {
  const double disc = t.omega0 * t.omega0 - t.gamma * t.gamma;
  if (disc > 0.0) {
    const double b = std::sqrt(disc);
    return {cplx(-t.gamma, b), cplx(-t.gamma, -b)};
  }
  const double s = std::sqrt(-disc);
  return {cplx(-t.gamma + s, 0.0), cplx(-t.gamma - s, 0.0)};
}

namespace {

cplx term_value(cplx z, const DLTerm& t) {
  const cplx den = t.omega0 * t.omega0 + z * z + 2.0 * t.gamma * z;
  const double scale = std::max({1.0, t.omega0 * t.omega0, std::norm(z)});
  if (std::abs(den) <= 1e-14 * scale) throw PoleHit("evaluation at a Drude-Lorentz pole");
  return t.alpha / den;
}

}  // namespace

cplx eval_chi_dl(cplx z, const DrudeLorentzParams& p) {
  cplx acc = 0.0;
  for (const auto& t : p.terms) acc += term_value(z, t);
  return acc;
}

cplx mod_dl_eval(cplx z, const ModDLParams& p) {
  return p.base.eps0 + eval_chi_dl(z, p.base) * (1.0 + (z - p.z0) / p.r);
}

SampledKernel dl_time_kernel(const DrudeLorentzParams& p, const TimeGrid& grid) {
  grid.validate();
  for (const auto& t : p.terms) {
    if (!(t.omega0 > t.gamma)) throw OverdampedUnsupported("time kernel needs omega0 > gamma");
  }
  SampledKernel k;
  k.dt = grid.dt;
  k.values = VecC::Zero(grid.n);
  for (const auto& t : p.terms) {
    const double b = std::sqrt(t.omega0 * t.omega0 - t.gamma * t.gamma);
    const double a = t.alpha / b;
    for (Eigen::Index m = 0; m < grid.n; ++m) {
      const double s = grid.dt * static_cast<double>(m);
      k.values(m) += a * std::exp(-t.gamma * s) * std::sin(b * s);
    }
  }
  return k;
}

double re_zM_closed_form(double nu, double t, const DrudeLorentzParams& p) {
  double acc = p.eps0 * nu;
  for (const auto& term : p.terms) {
    const double a = term.alpha, g = term.gamma, w2 = term.omega0 * term.omega0;
    const double re_den = w2 + nu * nu - t * t + 2.0 * g * nu;
    const double im_den = nu * t + g * t;
    const double den = re_den * re_den + 4.0 * im_den * im_den;
    if (den <= 1e-28 * std::max(1.0, w2 * w2)) throw PoleHit("closed form evaluated at a pole");
    acc += (a * nu * (w2 + nu * nu + t * t + 2.0 * g * nu) + 2.0 * a * g * t * t) / den;
  }
  return acc;
}

double mod_dl_g(double nu, double t, const ModDLParams& p) {
  const cplx z(nu, t);
  return (z * mod_dl_eval(z, p)).real() - p.base.eps0 * nu;
}

double mod_dl_g_closed_form(double nu, double t, const ModDLParams& p) {
  if (p.z0 != cplx(0.0)) throw InvalidArgument("closed form assumes z0 = 0");
  const double r = p.r;
  double acc = 0.0;
  for (const auto& term : p.base.terms) {
    const double a = term.alpha, g = term.gamma, w2 = term.omega0 * term.omega0;
    const double nu2 = nu * nu, t2 = t * t;
    const double num = nu * w2 * r + (2.0 * g * r + w2) * nu2 + (r + 2.0 * g) * nu2 * nu +
                       ((r + 2.0 * g) * nu + 2.0 * nu2 + 2.0 * g * r - w2) * t2 + nu2 * nu2 + t2 * t2;
    const double re_den = w2 + nu2 - t2 + 2.0 * g * nu;
    const double den = re_den * re_den + (2.0 * nu + 2.0 * g) * (2.0 * nu + 2.0 * g) * t2;
    if (den <= 1e-28 * std::max(1.0, w2 * w2)) throw PoleHit("closed form evaluated at a pole");
    acc += (a / r) * num / den;
  }
  return acc;
}

std::string to_string(LawModel m) {
  switch (m) {
    case LawModel::DL: return "dl";
    case LawModel::ModDL: return "mod_dl";
    case LawModel::DLSigma: return "dl_sigma";
  }
  return "dl";
}

LawModel law_model_from_string(const std::string& s) {
  if (s == "dl") return LawModel::DL;
  if (s == "mod_dl") return LawModel::ModDL;
  if (s == "dl_sigma") return LawModel::DLSigma;
  throw ConfigError("unknown material model '" + s + "' (expected dl, mod_dl or dl_sigma)");
}

ScalarLaw ScalarLaw::drude_lorentz(const DrudeLorentzParams& p) {
  p.validate();
  ScalarLaw law;
  law.model = LawModel::DL;
  law.dl = p;
  return law;
}

ScalarLaw ScalarLaw::modified(const ModDLParams& p) {
  p.base.validate();
  if (!(p.r > 0.0)) throw InvalidArgument("modification rate r must be positive");
  ScalarLaw law;
  law.model = LawModel::ModDL;
  law.dl = p.base;
  law.r = p.r;
  law.z0 = p.z0;
  return law;
}

ScalarLaw ScalarLaw::instantaneous(double eps0) {
  ScalarLaw law;
  law.dl.eps0 = eps0;
  law.validate();
  return law;
}

void ScalarLaw::validate() const {
  if (!dl.terms.empty()) {
    dl.validate();
  } else if (!(dl.eps0 > 0.0) || !std::isfinite(dl.eps0)) {
    throw InvalidArgument("eps0 must be positive and finite");
  }
  if (!(r > 0.0)) throw InvalidArgument("modification rate r must be positive");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidArgument("conductivity must be nonnegative");
}

cplx ScalarLaw::susceptibility(cplx z) const {
  const cplx chi = eval_chi_dl(z, dl);
  if (std::isfinite(r)) return chi * (1.0 + (z - z0) / r);
  return chi;
}

std::vector<cplx> ScalarLaw::poles() const {
  std::vector<cplx> out;
  for (const auto& t : dl.terms) {
    auto p = dl_term_poles(t);
    out.insert(out.end(), p.begin(), p.end());
  }
  if (sigma != 0.0) out.emplace_back(0.0, 0.0);
  return out;
}

double ScalarLaw::re_zM_tail_limit(double nu) const {
  double lim = dl.eps0 * nu + sigma;
  if (std::isfinite(r)) {
    for (const auto& t : dl.terms) lim += t.alpha / r;
  }
  return lim;
}

std::vector<ExpTerm> ScalarLaw::kernel_terms() const {
  if (z0.imag() != 0.0) throw InvalidArgument("time kernel needs a real shift z0");
  std::vector<ExpTerm> out;
  for (const auto& t : dl.terms) {
    if (!(t.omega0 > t.gamma)) throw OverdampedUnsupported("time kernel needs omega0 > gamma");
    const double b = std::sqrt(t.omega0 * t.omega0 - t.gamma * t.gamma);
    const double a = t.alpha / b;
    const cplx lambda(-t.gamma, b);
    // sin part Re(-i a e^{lambda t}); the (z - z0)/r factor adds its time derivative.
    cplx factor = 1.0;
    if (std::isfinite(r)) factor = (1.0 - z0 / r) + lambda / r;
    out.push_back({lambda, cplx(0.0, -a) * factor});
  }
  return out;
}

double ScalarLaw::kernel_at_0plus() const {
  double v = 0.0;
  for (const auto& e : kernel_terms()) v += e.coeff.real();
  return v;
}

ScalarLaw conductivity_law(const ScalarLaw& eps_law, double sigma) {
  if (!(sigma >= 0.0)) throw InvalidArgument("conductivity must be nonnegative");
  ScalarLaw law = eps_law;
  law.sigma = sigma;
  if (sigma > 0.0 && law.model == LawModel::DL) law.model = LawModel::DLSigma;
  return law;
}

void PiecewiseMaterial::validate() const {
  law1.validate();
  law2.validate();
  if (!(mu1 > 0.0) || !(mu2 > 0.0)) throw InvalidArgument("permeabilities must be positive");
}

}  // namespace evolab
