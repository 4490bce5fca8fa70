#include "evolab/history.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace evolab {

namespace {

Eigen::Index zero_index(const TimeGrid& g) {
  const double k = -g.t_start / g.dt;
  const double kr = std::round(k);
  if (std::abs(k - kr) > 1e-9 || kr < 0.0 || kr >= static_cast<double>(g.n)) {
    throw InvalidArgument("time grid does not contain t = 0");
  }
  return static_cast<Eigen::Index>(kr);
}

void require_same_step(const HistorySpec& h, const TimeGrid& g) {
  if (std::abs(h.phi.grid.dt - g.dt) > 1e-12 * g.dt) throw InvalidArgument("history and grid steps differ");
}

std::vector<ExpTerm> terms_of(const ScalarLaw& law) {
  if (law.dl.terms.empty()) return {};
  return law.kernel_terms();
}

/// Q_j = int exp(-lambda_j s) E(s) ds over the history by the trapezoid rule.
MatC history_accumulators(const HistorySpec& h, const std::vector<ExpTerm>& terms, Eigen::Index n_e) {
  const Eigen::Index n = h.phi.n();
  MatC Q = MatC::Zero(n_e, static_cast<Eigen::Index>(terms.size()));
  for (size_t j = 0; j < terms.size(); ++j) {
    VecC acc = VecC::Zero(n_e);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double w = (k == 0 || k == n - 1) ? 0.5 : 1.0;
      acc += (w * h.phi.grid.dt * std::exp(-terms[j].lambda * h.phi.grid.t(k))) *
             h.phi.values.row(k).head(n_e).transpose();
    }
    Q.col(static_cast<Eigen::Index>(j)) = acc;
  }
  return Q;
}

/// Region-weighted sum_j Re(c_j lambda_j exp(lambda_j t) Q_j): the history memory rate at t >= 0.
struct MemoryRate {
  std::vector<ExpTerm> terms1, terms2;
  MatC Q1, Q2;
  VecR w1;

  VecC at(double t) const {
    VecC r1 = VecC::Zero(w1.size()), r2 = VecC::Zero(w1.size());
    for (size_t j = 0; j < terms1.size(); ++j) {
      r1 += (terms1[j].coeff * terms1[j].lambda * std::exp(terms1[j].lambda * t) * Q1.col(static_cast<Eigen::Index>(j)))
                .real()
                .cast<cplx>();
    }
    for (size_t j = 0; j < terms2.size(); ++j) {
      r2 += (terms2[j].coeff * terms2[j].lambda * std::exp(terms2[j].lambda * t) * Q2.col(static_cast<Eigen::Index>(j)))
                .real()
                .cast<cplx>();
    }
    return (w1.cast<cplx>().array() * r1.array() + (1.0 - w1.array()).cast<cplx>() * r2.array()).matrix();
  }
};

MemoryRate memory_rate(const HistorySpec& h, const OperatorBundle& b, const PiecewiseMaterial& m) {
  MemoryRate r;
  r.terms1 = terms_of(m.law1);
  r.terms2 = terms_of(m.law2);
  r.Q1 = history_accumulators(h, r.terms1, b.n_e());
  r.Q2 = history_accumulators(h, r.terms2, b.n_e());
  r.w1 = b.edge_w1;
  return r;
}

/// int kappa'(t - s) q(E0(s)) ds over the history for t = lag0 * dt >= 0.
VecC history_nonlinear_rate(const MemoryNonlinearity& nl, const HistorySpec& h, Eigen::Index n_e,
                            Eigen::Index lag0) {
  const Eigen::Index n = h.phi.n();
  const VecC& kp = nl.kernel.kappa_prime.values;
  const ScalarMap q = nl.q.map();
  VecC acc = VecC::Zero(n_e);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index lag = lag0 + (n - 1 - i);
    if (lag >= kp.size()) continue;
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    const cplx c = w * h.phi.grid.dt * kp(lag);
    for (Eigen::Index e = 0; e < n_e; ++e) acc(e) += c * q(h.phi.values(i, e));
  }
  return acc;
}

/// Per-sample d/dt (kernel * profile)(t) for a scalar profile on t > 0, with
/// int_0^t exp(lambda (t - s)) f(s) ds advanced by the trapezoid recursion.
VecR profile_memory_rate(const std::vector<ExpTerm>& terms, const VecR& f, double dt) {
  VecR out = VecR::Zero(f.size());
  for (const auto& e : terms) {
    const cplx g = std::exp(e.lambda * dt);
    cplx I = 0.0;
    for (Eigen::Index k = 0; k < f.size(); ++k) {
      if (k > 0) I = g * I + 0.5 * dt * (g * f(k - 1) + f(k));
      out(k) += (e.coeff * f(k) + e.coeff * e.lambda * I).real();
    }
  }
  return out;
}

VecR edge_average(const OperatorBundle& b, double v1, double v2) {
  return (b.edge_w1.array() * v1 + (1.0 - b.edge_w1.array()) * v2).matrix();
}

}  // namespace

HistorySpec HistorySpec::from_samples(const WeightedSignal& phi, bool with_derivative) {
  if (phi.n() < 3) throw InvalidArgument("history needs at least three samples");
  HistorySpec h;
  h.phi = phi;
  const Eigen::Index n = phi.n();
  h.phi_at_0minus = phi.values.row(n - 1).transpose();
  if (with_derivative) {
    h.dphi_at_0minus = ((3.0 * phi.values.row(n - 1) - 4.0 * phi.values.row(n - 2) + phi.values.row(n - 3)) /
                        (2.0 * phi.grid.dt))
                           .transpose();
  }
  h.validate();
  return h;
}

void HistorySpec::validate() const {
  phi.grid.validate();
  if (std::abs(phi.grid.t_end()) > 1e-9 * phi.grid.dt) throw InvalidArgument("history must end at t = 0");
  if (phi_at_0minus.size() != phi.dim() || phi_at_0minus != phi.values.row(phi.n() - 1).transpose()) {
    throw InvalidArgument("phi(0-) differs from the last history sample");
  }
  if (dphi_at_0minus && dphi_at_0minus->size() != phi.dim()) throw InvalidArgument("dphi(0-) has the wrong size");
  if (!zero_extended) throw InvalidArgument("only zero-extended histories are supported");
}

BumpSpec BumpSpec::polynomial(double support, double dt, bool use_gamma) {
  BumpSpec b;
  b.support = std::max(support, 10.0 * dt);
  b.use_gamma = use_gamma;
  return b;
}

double BumpSpec::eta(double t) const {
  if (t < 0.0 || t >= support) return 0.0;
  const double x = 1.0 - (t / support) * (t / support);
  return x * x * x;
}

double BumpSpec::eta_prime(double t) const {
  if (t < 0.0 || t >= support) return 0.0;
  const double x = 1.0 - (t / support) * (t / support);
  return -6.0 * t / (support * support) * x * x;
}

double BumpSpec::gamma(double t) const { return t * eta(t); }

double BumpSpec::gamma_prime(double t) const { return eta(t) + t * eta_prime(t); }

void BumpSpec::validate(double dt) const {
  if (!(support > 0.0) || !(dt > 0.0)) throw InvalidArgument("bump support and step must be positive");
  if (support < 10.0 * dt * (1.0 - 1e-12)) throw InvalidArgument("bump support shorter than 10 dt");
  // Right-sided differences: the profiles are only used on t > 0.
  const double d_eta = (-3.0 * eta(0.0) + 4.0 * eta(dt) - eta(2.0 * dt)) / (2.0 * dt);
  const double d_gamma = (-3.0 * gamma(0.0) + 4.0 * gamma(dt) - gamma(2.0 * dt)) / (2.0 * dt);
  const double tol = 1e-10 + 10.0 * dt * dt / (support * support);
  if (std::abs(eta(0.0) - 1.0) > 1e-10 || std::abs(gamma(0.0)) > 1e-10) {
    throw InvalidArgument("bump endpoint values violated");
  }
  if (std::abs(eta_prime(0.0)) > 1e-10 || std::abs(gamma_prime(0.0) - 1.0) > 1e-10) {
    throw InvalidArgument("bump endpoint derivatives violated");
  }
  if (std::abs(d_eta) > tol || std::abs(d_gamma - 1.0) > tol) {
    throw InvalidArgument("bump derivatives not resolved at this step");
  }
}

double default_history_window(const PiecewiseMaterial& m) {
  double slowest = std::numeric_limits<double>::infinity();
  for (const ScalarLaw* law : {&m.law1, &m.law2}) {
    for (const auto& t : law->dl.terms) {
      if (t.gamma > 0.0) slowest = std::min(slowest, t.gamma);
    }
  }
  if (!std::isfinite(slowest)) return 1.0;
  return 6.0 / slowest;
}

double kernel_tail_mass(const PiecewiseMaterial& m, double T_h) {
  double worst = 0.0;
  for (const ScalarLaw* law : {&m.law1, &m.law2}) {
    double mass = 0.0;
    for (const auto& e : terms_of(*law)) {
      const double decay = -e.lambda.real();
      if (!(decay > 0.0)) return std::numeric_limits<double>::infinity();
      mass += std::abs(e.coeff) * std::exp(-decay * T_h) / decay;
    }
    worst = std::max(worst, mass);
  }
  return worst;
}

WeightedSignal smooth_jump(const HistorySpec& h, const BumpSpec& b, const TimeGrid& grid, double rho) {
  h.validate();
  zero_index(grid);
  WeightedSignal out(grid, rho, h.phi.dim());
  for (Eigen::Index k = 0; k < grid.n; ++k) {
    const double t = grid.t(k);
    if (t <= 0.5 * grid.dt) continue;
    VecC v = b.eta(t) * h.phi_at_0minus;
    if (b.use_gamma && h.dphi_at_0minus) v += b.gamma(t) * *h.dphi_at_0minus;
    out.values.row(k) = v.transpose();
  }
  return out;
}

WeightedSignal build_g_phi(const HistorySpec& h, const BumpSpec& b, const OperatorBundle& bundle,
                           const PiecewiseMaterial& m, const TimeGrid& grid, double rho,
                           const MemoryNonlinearity* nl) {
  h.validate();
  require_same_step(h, grid);
  if (h.phi.dim() != bundle.dim()) throw InvalidArgument("history dimension differs from dim(A)");
  const Eigen::Index k0 = zero_index(grid);
  const Eigen::Index ne = bundle.n_e(), nh = bundle.n_h();
  const WeightedSignal plus = smooth_jump(h, b, grid, rho);
  const MemoryRate mem = memory_rate(h, bundle, m);
  const VecR eps0 = edge_average(bundle, m.law1.eps0(), m.law2.eps0());
  const VecR sigma = edge_average(bundle, m.law1.sigma, m.law2.sigma);
  const VecR mu = face_mu(bundle, m);
  const VecC E0 = h.phi_at_0minus.head(ne), H0 = h.phi_at_0minus.tail(nh);
  const bool with_gamma = b.use_gamma && h.dphi_at_0minus.has_value();
  const VecC dE0 = with_gamma ? VecC(h.dphi_at_0minus->head(ne)) : VecC::Zero(ne);
  const VecC dH0 = with_gamma ? VecC(h.dphi_at_0minus->tail(nh)) : VecC::Zero(nh);
  const SpMatC Cc = bundle.C.cast<cplx>(), C0c = bundle.C0.cast<cplx>();

  // Linear memory acting on phi+, as a profile rate per region.
  const Eigen::Index np = grid.n - k0;
  VecR eta_s(np), gamma_s(np);
  for (Eigen::Index i = 0; i < np; ++i) {
    const double t = grid.t(k0 + i);
    eta_s(i) = i == 0 ? 0.0 : b.eta(t);
    gamma_s(i) = (i == 0 || !with_gamma) ? 0.0 : b.gamma(t);
  }
  const auto terms1 = terms_of(m.law1), terms2 = terms_of(m.law2);
  const VecR w1 = bundle.edge_w1, w2 = (1.0 - w1.array()).matrix();
  const VecR a1 = profile_memory_rate(terms1, eta_s, grid.dt), a2 = profile_memory_rate(terms2, eta_s, grid.dt);
  const VecR c1 = profile_memory_rate(terms1, gamma_s, grid.dt), c2 = profile_memory_rate(terms2, gamma_s, grid.dt);

  WeightedSignal g(grid, rho, bundle.dim());
  for (Eigen::Index k = k0 + 1; k < grid.n; ++k) {
    const double t = grid.t(k);
    const Eigen::Index i = k - k0;
    const VecC Ep = plus.values.row(k).head(ne).transpose();
    const VecC Hp = plus.values.row(k).tail(nh).transpose();
    const double de = b.eta_prime(t), dg = with_gamma ? b.gamma_prime(t) : 0.0;
    VecC rE = (eps0.cast<cplx>().array() * (de * E0 + dg * dE0).array()).matrix() + mem.at(t) +
              (sigma.cast<cplx>().array() * Ep.array()).matrix() - Cc * Hp;
    rE += ((w1 * a1(i) + w2 * a2(i)).cast<cplx>().array() * E0.array() +
           (w1 * c1(i) + w2 * c2(i)).cast<cplx>().array() * dE0.array())
              .matrix();
    if (nl) rE += history_nonlinear_rate(*nl, h, ne, k - k0);
    const VecC rH = (mu.cast<cplx>().array() * (de * H0 + dg * dH0).array()).matrix() + C0c * Ep;
    g.values.row(k).head(ne) = -rE.transpose();
    g.values.row(k).tail(nh) = -rH.transpose();
  }
  return g;
}

MaxwellInhomogeneity build_maxwell_inhomogeneity(const HistorySpec& h, const BumpSpec& b,
                                                 const OperatorBundle& bundle, const PiecewiseMaterial& m,
                                                 const TimeGrid& grid, double rho, const MemoryNonlinearity* nl) {
  const Eigen::Index ne = bundle.n_e(), nh = bundle.n_h();
  MaxwellInhomogeneity out;
  WeightedSignal g = build_g_phi(h, b, bundle, m, grid, rho, nl);
  out.phi_plus = smooth_jump(h, b, grid, rho);
  if (nl) {
    const WeightedSignal shift = apply_dt_P_nl(nl->kernel, nl->q.map(), out.phi_plus, ne);
    g.values -= shift.values;
  }
  out.Phi = field_block(g, 0, ne);
  out.Psi = field_block(g, ne, nh);

  const VecR mu = face_mu(bundle, m);
  const VecC muH0 = (mu.cast<cplx>().array() * h.phi_at_0minus.tail(nh).array()).matrix();
  out.div_mu_H0_interior = (bundle.D.cast<cplx>() * muH0).norm();
  double boundary = 0.0;
  for (int f = 0; f < bundle.D.outerSize(); ++f) {
    int count = 0;
    for (SpMatR::InnerIterator it(bundle.D, f); it; ++it) ++count;
    if (count == 1) boundary += std::norm(muH0(f));
  }
  out.boundary_normal_trace = std::sqrt(boundary);
  return out;
}

NonlinearMap shifted_nonlinearity(const MemoryNonlinearity& nl, const WeightedSignal& phi_plus, Eigen::Index n_e) {
  const ScalarMap q = nl.q.map();
  const WeightedSignal base = apply_dt_P_nl(nl.kernel, q, phi_plus, n_e);
  return [nl, q, phi_plus, base, n_e](const WeightedSignal& u) {
    const WeightedSignal full = apply_dt_P_nl(nl.kernel, q, u + reweighted(phi_plus, u.rho), n_e);
    WeightedSignal out = full;
    out.values -= base.values;
    return out;
  };
}

double check_compatibility(const HistorySpec& h, const OperatorBundle& bundle, const PiecewiseMaterial& m,
                           const MemoryNonlinearity* nl) {
  h.validate();
  if (h.phi.dim() != bundle.dim()) throw InvalidArgument("history dimension differs from dim(A)");
  const Eigen::Index ne = bundle.n_e(), nh = bundle.n_h(), n = h.phi.n();
  VecC dphi;
  if (h.dphi_at_0minus) {
    dphi = *h.dphi_at_0minus;
  } else {
    if (n < 3) throw InvalidArgument("history too short for a derivative");
    dphi = ((3.0 * h.phi.values.row(n - 1) - 4.0 * h.phi.values.row(n - 2) + h.phi.values.row(n - 3)) /
            (2.0 * h.phi.grid.dt))
               .transpose();
  }
  const VecR eps0 = edge_average(bundle, m.law1.eps0(), m.law2.eps0());
  const VecR sigma = edge_average(bundle, m.law1.sigma, m.law2.sigma);
  const VecR chi0 = edge_average(bundle, m.law1.dl.terms.empty() ? 0.0 : m.law1.kernel_at_0plus(),
                                 m.law2.dl.terms.empty() ? 0.0 : m.law2.kernel_at_0plus());
  const VecR mu = face_mu(bundle, m);
  const VecC E0 = h.phi_at_0minus.head(ne), H0 = h.phi_at_0minus.tail(nh);

  VecC rE = (eps0.cast<cplx>().array() * dphi.head(ne).array()).matrix() +
            ((chi0 + sigma).cast<cplx>().array() * E0.array()).matrix() + memory_rate(h, bundle, m).at(0.0) -
            bundle.C.cast<cplx>() * H0;
  if (nl) {
    const ScalarMap q = nl->q.map();
    for (Eigen::Index e = 0; e < ne; ++e) rE(e) += nl->kernel.kappa_at_0plus * q(E0(e));
    rE += history_nonlinear_rate(*nl, h, ne, 0);
  }
  const VecC rH = (mu.cast<cplx>().array() * dphi.tail(nh).array()).matrix() + bundle.C0.cast<cplx>() * E0;
  return std::sqrt(rE.squaredNorm() + rH.squaredNorm());
}

WeightedSignal reconstruct_solution(const WeightedSignal& u_tilde, const HistorySpec& h,
                                    const WeightedSignal& phi_plus) {
  h.validate();
  require_compatible(u_tilde, reweighted(phi_plus, u_tilde.rho));
  require_same_step(h, u_tilde.grid);
  const Eigen::Index k0 = zero_index(u_tilde.grid);
  const Eigen::Index nh = h.phi.n();
  WeightedSignal U(u_tilde.grid, u_tilde.rho, u_tilde.dim(), u_tilde.wrap_tol);
  for (Eigen::Index k = 0; k <= k0; ++k) {
    const Eigen::Index i = nh - 1 - (k0 - k);
    if (i >= 0) U.values.row(k) = h.phi.values.row(i);
  }
  for (Eigen::Index k = k0 + 1; k < U.n(); ++k) U.values.row(k) = u_tilde.values.row(k) + phi_plus.values.row(k);
  return U;
}

}  // namespace evolab
