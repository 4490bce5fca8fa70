#include "evolab/stability.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <optional>
#include <random>
#include <sstream>

namespace evolab {

namespace {

const ScalarLaw& region_law(const MdSystem& md, int region) { return region == 0 ? md.law1 : md.law2; }

std::vector<cplx> all_poles(const PiecewiseMaterial& m) {
  std::vector<cplx> p = m.law1.poles();
  const std::vector<cplx> q = m.law2.poles();
  p.insert(p.end(), q.begin(), q.end());
  return p;
}

double max_omega0(const PiecewiseMaterial& m) {
  return std::max({1.0, m.law1.max_omega0(), m.law2.max_omega0()});
}

ScanGrid strip_grid(const PiecewiseMaterial& m, double nu, const CertifyOptions& opt) {
  ScanGrid g;
  g.nu_lo = -nu;
  g.nu_hi = opt.nu_top;
  g.n_nu = opt.n_nu;
  g.t_min = 1e-3;
  g.t_max = 1e4 * max_omega0(m);
  g.n_t = opt.n_t;
  g.negative_t = true;
  return g;
}

/// Largest nu in (lo, hi] with pred(nu) true, assuming pred is monotone decreasing in nu.
template <class Pred>
double bisect_largest(double lo, double hi, int steps, Pred pred) {
  for (int i = 0; i < steps; ++i) {
    const double mid = std::sqrt(lo * hi);
    if (pred(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

/// Multiplies the transform by 1 / (rho + i xi); rho must be nonzero.
WeightedSignal spectral_integral(const WeightedSignal& u) {
  if (u.rho == 0.0) throw NonPositiveWeight("spectral integral needs a nonzero weight");
  WeightedSignal v = u;
  v.wrap_tol = kNoWrapCheck;
  SpectralSignal U = fourier_laplace(v);
  for (Eigen::Index m = 0; m < U.values.rows(); ++m) U.values.row(m) /= cplx(U.rho, U.xi(m));
  return inverse_fourier_laplace(U, kNoWrapCheck);
}

WeightedSignal derivative_of(const WeightedSignal& u) {
  WeightedSignal v = u;
  v.wrap_tol = kNoWrapCheck;
  WeightedSignal d = spectral_derivative(v);
  d.wrap_tol = kNoWrapCheck;
  return d;
}

double sin4(double t, double t_on, double duration) {
  if (t <= t_on || t >= t_on + duration) return 0.0;
  return std::pow(std::sin(M_PI * (t - t_on) / duration), 4);
}

}  // namespace

MatC MdSystem::eval(cplx z, int region) const {
  const ScalarLaw& law = region_law(*this, region);
  const double eps0 = law.eps0();
  MatC M(2, 2);
  M(0, 0) = law.eval(z) - d * eps0 / z;
  M(0, 1) = d * (law.memory_part(z) - d * eps0) / (z * sigma_C);
  M(1, 0) = 0.0;
  M(1, 1) = 1.0 + d / z;
  return M;
}

double MdSystem::accretivity_bound(cplx z) const {
  double a = std::numeric_limits<double>::infinity();
  double b = 0.0;
  for (int r = 0; r < 2; ++r) {
    const ScalarLaw& law = region_law(*this, r);
    a = std::min(a, (law.z_times(z) - d * law.eps0()).real());
    b = std::max(b, d * std::abs(law.memory_part(z) - d * law.eps0()) / sigma_C);
  }
  const double c = z.real() + d;
  return 0.5 * (a + c) - std::sqrt(0.25 * (a - c) * (a - c) + 0.25 * b * b);
}

double MdSystem::norm_bound(cplx z) const {
  double a = 0.0, b = 0.0;
  for (int r = 0; r < 2; ++r) {
    const ScalarLaw& law = region_law(*this, r);
    a = std::max(a, std::abs(law.z_times(z) - d * law.eps0()));
    b = std::max(b, d * std::abs(law.memory_part(z) - d * law.eps0()) / sigma_C);
  }
  Eigen::Matrix2d N;
  N << a, b, 0.0, std::abs(z + d);
  return Eigen::JacobiSVD<Eigen::Matrix2d>(N).singularValues()(0);
}

MdSystem build_Md(const PiecewiseMaterial& m, double sigma_C, double d) {
  m.validate();
  if (!(sigma_C > 0.0)) throw InvalidArgument("M_d needs an invertible reduced curl (sigma_C > 0)");
  if (!(d >= 0.0)) throw InvalidArgument("M_d shift must be nonnegative");
  return MdSystem{m.law1, m.law2, sigma_C, d};
}

SchurMargins schur_accretivity_check(const MatC& T, Eigen::Index k) {
  if (T.rows() != T.cols() || k <= 0 || k >= T.rows()) throw InvalidArgument("Schur split must be inside a square matrix");
  SchurMargins s;
  s.herm_min = hermitian_min_eig(T);
  s.margin11 = hermitian_min_eig(T.bottomRightCorner(T.rows() - k, T.cols() - k));
  s.margin_schur = hermitian_min_eig(schur_complement(T, k));
  return s;
}

double projection_invertibility_check(const OperatorBundle& b, const ProjectionBasis& p, const VecR& face_weight) {
  if (face_weight.size() != b.n_h()) throw InvalidArgument("face weight has the wrong size");
  if (!(face_weight.minCoeff() > 0.0)) throw InvalidArgument("face weight must be positive definite");
  if (p.basis_ran_C.cols() == 0) throw InvalidArgument("ran(C) is trivial");
  const MatR CV = b.C0 * p.basis_ran_C;
  const MatR K = CV.transpose() * face_weight.asDiagonal() * CV;
  Eigen::SelfAdjointEigenSolver<MatR> es(0.5 * (K + K.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double reduced_curl_sigma(const OperatorBundle& b, const ProjectionBasis& p, const PiecewiseMaterial& m) {
  const VecR inv_mu = face_mu(b, m).cwiseInverse();
  return std::sqrt(projection_invertibility_check(b, p, inv_mu));
}

std::string to_string(DecayRoute r) {
  switch (r) {
    case DecayRoute::None: return "none";
    case DecayRoute::Md: return "md";
    case DecayRoute::Conductivity: return "conductivity";
  }
  return "none";
}

MdCheck check_Md(const MdSystem& md, double nu, double delta, const CertifyOptions& opt) {
  const PiecewiseMaterial pm{md.law1, md.law2, 1.0, 1.0};
  const ScanFunctional f = [&md](cplx z) { return md.accretivity_bound(z); };
  const AccretivityScan scan =
      accretivity_scan(f, all_poles(pm), delta, strip_grid(pm, nu, opt), ConditionId::Md, opt.exec);
  MdCheck c;
  c.c_min = scan.c_min;
  // Polar samples of the disk part with Re z >= -nu.
  const int n_r = 16, n_a = 64;
  for (int i = 0; i <= n_r; ++i) {
    const double r = delta * i / n_r;
    for (int j = 0; j < n_a; ++j) {
      const cplx z = std::polar(r, 2.0 * M_PI * j / n_a);
      if (z.real() < -nu) continue;
      c.disk_norm = std::max(c.disk_norm, md.norm_bound(z));
    }
    if (r > nu) {
      const double y = std::sqrt(r * r - nu * nu);
      c.disk_norm = std::max({c.disk_norm, md.norm_bound(cplx(-nu, y)), md.norm_bound(cplx(-nu, -y))});
    }
  }
  c.passes = c.c_min > 0.0 && c.disk_norm < md.sigma_C && scan.excluded_pole_cells == 0;
  return c;
}

double choose_d(const PiecewiseMaterial& m, double sigma_C, double nu, double delta, const CertifyOptions& opt) {
  auto margin = [&](double d) { return check_Md(build_Md(m, sigma_C, d), nu, delta, opt).c_min; };
  const double lo = nu * (1.0 + 1e-9) + 1e-12;
  const double hi = std::max(2.0 * lo, 4.0);
  // Coarse log grid, then golden section around the best cell.
  const int n = 24;
  double best_d = lo, best = -std::numeric_limits<double>::infinity();
  std::vector<double> ds(n + 1);
  for (int i = 0; i <= n; ++i) ds[static_cast<size_t>(i)] = lo * std::pow(hi / lo, static_cast<double>(i) / n);
  int best_i = 0;
  for (int i = 0; i <= n; ++i) {
    const double v = margin(ds[static_cast<size_t>(i)]);
    if (v > best) {
      best = v;
      best_d = ds[static_cast<size_t>(i)];
      best_i = i;
    }
  }
  double a = ds[static_cast<size_t>(std::max(0, best_i - 1))];
  double b = ds[static_cast<size_t>(std::min(n, best_i + 1))];
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = margin(x1), f2 = margin(x2);
  for (int it = 0; it < 30; ++it) {
    if (f1 > f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = margin(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = margin(x2);
    }
  }
  const double d_star = 0.5 * (a + b);
  return margin(d_star) >= best ? d_star : best_d;
}

DecayCertificate certify_decay(const PiecewiseMaterial& m, double sigma_C, CertifyOptions opt) {
  m.validate();
  if (!(sigma_C > 0.0)) throw InvalidArgument("certification needs sigma_C > 0");
  DecayCertificate cert;
  cert.sigma_C = sigma_C;
  const double nu_floor = 1e-4;

  if (m.law1.sigma > 0.0 && m.law2.sigma > 0.0) {
    // Strict accretivity of z M(z) on the strip gates the conductivity route; the rate still comes from M_d.
    double strip = std::numeric_limits<double>::infinity();
    for (const ScalarLaw* law : {&m.law1, &m.law2}) {
      const AccretivityScan s = accretivity_scan(law_functional(*law, ConditionId::M4), law->poles(), 0.0,
                                                 strip_grid(m, nu_floor, opt), ConditionId::M4, opt.exec);
      strip = std::min({strip, s.c_min, law->re_zM_tail_limit(-nu_floor)});
    }
    if (!(strip > 0.0)) {
      cert.reason = "no strict accretivity of z M(z) on any strip";
      return cert;
    }
    cert.route = DecayRoute::Conductivity;
  } else {
    cert.route = DecayRoute::Md;
  }

  double eps_at_0 = 0.0;
  for (const ScalarLaw* law : {&m.law1, &m.law2}) eps_at_0 = std::max(eps_at_0, std::abs(law->eps(cplx(1e-9, 0.0))));
  // Auto radius: descending candidates; the first that passes wins.
  std::vector<double> deltas;
  if (opt.delta > 0.0) {
    deltas.push_back(opt.delta);
  } else {
    const double unit = sigma_C / eps_at_0;
    for (int i = 12; i >= 0; --i) deltas.push_back(unit * 0.25 * std::pow(8.0, static_cast<double>(i) / 12.0));
  }
  struct Choice {
    double delta = 0.0, d = 0.0;
    MdCheck check;
  };
  auto attempt = [&](double nu) {
    for (double delta : deltas) {
      const double d = choose_d(m, sigma_C, nu, delta, opt);
      const MdCheck c = check_Md(build_Md(m, sigma_C, d), nu, delta, opt);
      if (c.passes) return std::optional<Choice>(Choice{delta, d, c});
    }
    return std::optional<Choice>();
  };
  if (!attempt(nu_floor)) {
    const bool conductive = cert.route == DecayRoute::Conductivity;
    cert.route = DecayRoute::None;
    cert.reason = conductive ? "strip accretivity holds but no decay rate could be quantified"
                             : "no strict accretivity of z M_d(z) outside the disk for any decay rate";
    return cert;
  }
  cert.nu0 = bisect_largest(nu_floor, opt.nu_max, opt.bisection_steps,
                            [&](double nu) { return attempt(nu).has_value(); });
  const std::optional<Choice> c = attempt(cert.nu0);
  cert.certified = c.has_value();
  if (!cert.certified) {
    cert.reason = "margin lost at the bisection endpoint";
    return cert;
  }
  cert.delta = c->delta;
  cert.d = c->d;
  cert.c_min = c->check.c_min;
  cert.disk_norm = c->check.disk_norm;
  return cert;
}

DecayFit fit_decay(const VecR& times, const VecR& energy, double t_lo, double t_hi) {
  if (times.size() != energy.size()) throw InvalidArgument("decay series lengths differ");
  DecayFit f;
  f.times = times;
  f.energy = energy;
  f.t_lo = t_lo;
  f.t_hi = t_hi;
  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (Eigen::Index k = 0; k < times.size(); ++k) {
    if (times(k) < t_lo || times(k) > t_hi || !(energy(k) > 0.0)) continue;
    const double x = times(k), y = std::log(energy(k));
    n += 1;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  if (n < 3) throw InvalidArgument("decay fit window holds fewer than three samples");
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.intercept = (sy - slope * sx) / n;
  f.nu_hat = -slope;
  double ss_res = 0, ss_tot = 0;
  const double mean = sy / n;
  for (Eigen::Index k = 0; k < times.size(); ++k) {
    if (times(k) < t_lo || times(k) > t_hi || !(energy(k) > 0.0)) continue;
    const double y = std::log(energy(k));
    const double r = y - (f.intercept + slope * times(k));
    ss_res += r * r;
    ss_tot += (y - mean) * (y - mean);
  }
  f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
  for (Eigen::Index k = 0; k < times.size(); ++k) {
    if (times(k) < t_lo) continue;
    f.dominance = std::max(f.dominance, energy(k) * std::exp(f.nu_hat * times(k) - f.intercept));
  }
  return f;
}

DivergenceFreeData make_divergence_free_data(const OperatorBundle& b, const ProjectionBasis& p, const TimeGrid& grid,
                                             double rho, std::uint64_t seed, double t_on, double duration) {
  if (!(duration > 0.0)) throw InvalidArgument("pulse duration must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  VecR f(b.n_h()), e(b.n_e());
  for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = nd(rng);
  for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = nd(rng);
  VecR phi = b.C * f, psi = b.C0 * e;
  phi /= phi.norm();
  psi /= psi.norm();
  DivergenceFreeData d;
  d.t_on = t_on;
  d.duration = duration;
  d.Phi = WeightedSignal(grid, rho, b.n_e());
  d.Psi = WeightedSignal(grid, rho, b.n_h());
  for (Eigen::Index k = 0; k < grid.n; ++k) {
    const double s = sin4(grid.t(k), t_on, duration);
    d.Phi.values.row(k) = (s * phi).cast<cplx>().transpose();
    d.Psi.values.row(k) = (s * psi).cast<cplx>().transpose();
  }
  d.div_Phi = (b.G0.transpose() * phi).norm();
  d.pi0_Phi = p.apply_pi0(phi).norm();
  d.pi1_Psi = p.apply_pi1(psi).norm();
  return d;
}

std::vector<DecayRun> simulate_decay(std::shared_ptr<const OperatorBundle> b, const PiecewiseMaterial& m,
                                     const DecayCertificate& cert, const DivergenceFreeData& data,
                                     const std::vector<double>& nu_list, DecayOptions opt) {
  if (!cert.certified) {
    throw NotCertified("stability run refused: " + (cert.reason.empty() ? std::string("no certificate") : cert.reason));
  }
  std::vector<DecayRun> runs;
  for (double nu : nu_list) {
    if (!(nu > 0.0) || !(nu < cert.nu0)) {
      throw NotCertified("decay rate " + format_sci(nu) + " outside the certified range (0, " + format_sci(cert.nu0) + ")");
    }
    SolverOptions so;
    so.symbol = opt.symbol;
    so.wrap_tol = opt.wrap_tol;
    const double rho = -nu;
    const WeightedSignal g = stack_fields(reweighted(data.Phi, rho), reweighted(data.Psi, rho));
    SpectralOperator S(b, m, rho, g.grid, so);
    DecayRun run;
    run.nu = nu;
    run.solution = S.apply(g, &run.report);
    const VecR energy = sample_norms(run.solution);
    VecR times(g.grid.n);
    double peak_w = 0.0;
    for (Eigen::Index k = 0; k < g.grid.n; ++k) {
      times(k) = g.grid.t(k);
      peak_w = std::max(peak_w, energy(k) * std::exp(-rho * times(k)));
    }
    const double t_lo = data.t_on + data.duration * (1.0 + opt.lag_durations);
    double t_hi = t_lo;
    for (Eigen::Index k = 0; k < g.grid.n; ++k) {
      if (times(k) >= t_lo && energy(k) * std::exp(-rho * times(k)) >= opt.floor * peak_w) t_hi = times(k);
    }
    run.fit = fit_decay(times, energy, t_lo, t_hi);
    runs.push_back(std::move(run));
  }
  return runs;
}

std::vector<EstimateRow> verify_first_order_estimates(const OperatorBundle& b, const ProjectionBasis& p,
                                                      const PiecewiseMaterial& m, const WeightedSignal& solution,
                                                      const WeightedSignal& Phi, const WeightedSignal& Psi) {
  const double rho = solution.rho;
  const Eigen::Index ne = b.n_e(), nh = b.n_h();
  const WeightedSignal Phi_w = reweighted(Phi, rho), Psi_w = reweighted(Psi, rho);
  const VecR inv_mu = face_mu(b, m).cwiseInverse();

  WeightedSignal g = derivative_of(Phi_w);
  const MatC curl_psi = (b.C * inv_mu.asDiagonal() * Psi_w.values.transpose().real()).cast<cplx>() +
                        cplx(0.0, 1.0) * (b.C * inv_mu.asDiagonal() * Psi_w.values.transpose().imag()).cast<cplx>();
  g.values += curl_psi.transpose();

  const double zero_tol = 1e-300;
  auto projected = [](const WeightedSignal& u, const MatR& basis) {
    WeightedSignal out = u;
    const MatR P = basis * basis.transpose();
    out.values = (u.values.real() * P).cast<cplx>() + cplx(0.0, 1.0) * (u.values.imag() * P).cast<cplx>();
    return out;
  };
  const bool trivial_phi = Phi_w.values.norm() <= zero_tol, trivial_psi = Psi_w.values.norm() <= zero_tol;
  const double h = trivial_phi ? 0.0 : weighted_norm(projected(spectral_integral(Phi_w), p.basis_ker_C0));
  const double w = trivial_psi ? 0.0 : weighted_norm(projected(spectral_integral(Psi_w), p.basis_ker_C));

  const WeightedSignal E = field_block(solution, 0, ne), H = field_block(solution, ne, nh);
  const double gn = weighted_norm(g), phin = weighted_norm(Phi_w), psin = weighted_norm(Psi_w);
  const bool trivial_sol = solution.values.norm() <= zero_tol;
  const double dE = trivial_sol ? 0.0 : weighted_norm(derivative_of(E));
  const double dH = trivial_sol ? 0.0 : weighted_norm(derivative_of(H));

  auto row = [](std::string name, double lhs, double rhs) {
    return EstimateRow{std::move(name), lhs, rhs, rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0)};
  };
  return {row("E", weighted_norm(E), gn + h), row("H", weighted_norm(H), gn + phin + w), row("dE", dE, gn + phin),
          row("dH", dH, gn + psin)};
}

RestrictedGain restricted_gain(const SpectralOperator& S, const ProjectionBasis& p, int iterations) {
  const OperatorBundle& b = S.bundle();
  const Eigen::Index ne = b.n_e(), nh = b.n_h(), n = S.grid().n;
  const MatR& V = p.basis_ran_C;
  const MatR& K = p.basis_ker_C;
  auto project = [&](VecC x) {
    VecC out(ne + nh);
    const VecC e = x.head(ne), f = x.tail(nh);
    out.head(ne) = V.cast<cplx>() * (V.transpose().cast<cplx>() * e);
    out.tail(nh) = f - K.cast<cplx>() * (K.transpose().cast<cplx>() * f);
    return out;
  };
  VecR gains = VecR::Zero(n);
  std::vector<VecC> dirs(static_cast<size_t>(n));
  std::vector<std::exception_ptr> errors(static_cast<size_t>(n));
  auto body = [&](Eigen::Index m) {
    try {
      Eigen::SparseLU<SpMatC, Eigen::COLAMDOrdering<int>> lu;
      const SpMatC T = S.matrix(m);
      lu.compute(T);
      if (lu.info() != Eigen::Success) throw LinearSolveFailure("frequency matrix factorization failed");
      std::mt19937_64 rng(static_cast<std::uint64_t>(m) + 17);
      std::normal_distribution<double> nd;
      VecC x(ne + nh);
      for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = cplx(nd(rng), nd(rng));
      x = project(x);
      x.normalize();
      double s = 0.0;
      for (int it = 0; it < iterations; ++it) {
        const VecC y = lu.solve(x);
        s = y.norm();
        x = project(lu.adjoint().solve(y));
        x.normalize();
      }
      gains(m) = s;
      dirs[static_cast<size_t>(m)] = x;
    } catch (...) {
      errors[static_cast<size_t>(m)] = std::current_exception();
    }
  };
  if (S.options().exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (Eigen::Index m = 0; m < n; ++m) body(m);
  } else {
    for (Eigen::Index m = 0; m < n; ++m) body(m);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  RestrictedGain r;
  r.gain = gains.maxCoeff(&r.frequency);
  r.direction = dirs[static_cast<size_t>(r.frequency)];
  return r;
}

WeightedSignal aligned_data(const SpectralOperator& S, const RestrictedGain& g, double t_on, double duration) {
  const TimeGrid& grid = S.grid();
  const double xi = dual_frequencies(grid)(g.frequency);
  WeightedSignal out(grid, S.rho(), g.direction.size());
  for (Eigen::Index k = 0; k < grid.n; ++k) {
    const double t = grid.t(k);
    const double env = sin4(t, t_on, duration);
    if (env == 0.0) continue;
    out.values.row(k) = (env * std::exp(cplx(S.rho(), xi) * t)) * g.direction.transpose();
  }
  return out;
}

NonlinearMap projected_quadratic_source(const ProjectionBasis& p, Eigen::Index n_e, double beta) {
  const MatR P = p.basis_ran_C * p.basis_ran_C.transpose();
  return [P, n_e, beta](const WeightedSignal& u) {
    WeightedSignal out(u.grid, u.rho, u.dim(), u.wrap_tol);
    const MatC E = u.values.leftCols(n_e);
    const MatC q = (beta * E.array().abs().cast<cplx>() * E.array()).matrix();
    out.values.leftCols(n_e) = (q.real() * P).cast<cplx>() + cplx(0.0, 1.0) * (q.imag() * P).cast<cplx>();
    return out;
  };
}

double projected_quadratic_constant(double beta, const TimeGrid& grid, double nu) {
  return beta * std::sqrt(2.0 / grid.dt) * std::exp(nu * std::max(0.0, -grid.t_start));
}

double empirical_local_lipschitz(const NonlinearMap& N, const WeightedSignal& like, int pairs, double scale,
                                 double alpha, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  auto random_signal = [&]() {
    WeightedSignal s(like.grid, like.rho, like.dim(), kNoWrapCheck);
    for (Eigen::Index k = 0; k < s.n(); ++k) {
      const double w = std::exp(like.rho * like.grid.t(k));
      for (Eigen::Index j = 0; j < s.dim(); ++j) s.values(k, j) = w * cplx(nd(rng), nd(rng));
    }
    s.values *= scale / weighted_norm(s);
    return s;
  };
  double worst = 0.0;
  for (int i = 0; i < pairs; ++i) {
    const WeightedSignal u = random_signal(), v = random_signal();
    const double du = weighted_norm(u - v);
    if (!(du > 0.0)) continue;
    const double num = weighted_norm(N(u) - N(v));
    worst = std::max(worst, num / (std::pow(weighted_norm(u) + weighted_norm(v), alpha) * du));
  }
  return worst;
}

std::vector<CapabilityCase> default_battery() {
  DrudeLorentzParams dl{1.0, {{1.0, 1.0, 2.0}}};
  ModDLParams mod{dl, 3.0, 0.0};
  CapabilityCase a{"DL", {ScalarLaw::drude_lorentz(dl), ScalarLaw::drude_lorentz(dl), 1.0, 1.0}};
  CapabilityCase b{"mod-DL", {ScalarLaw::modified(mod), ScalarLaw::modified(mod), 1.0, 1.0}};
  const ScalarLaw cond = conductivity_law(ScalarLaw::drude_lorentz(dl), 1.0);
  CapabilityCase c{"DL+sigma", {cond, cond, 1.0, 1.0}};
  return {a, b, c};
}

std::vector<CapabilityRow> capability_matrix(const std::vector<CapabilityCase>& battery, const CapabilityOptions& opt) {
  auto bundle = std::make_shared<OperatorBundle>(build_curl_pair(opt.grid));
  const ProjectionBasis proj = helmholtz_projections(*bundle);
  const TimeGrid grid{0.0, opt.dt, opt.n};
  std::vector<CapabilityRow> rows(battery.size());
  std::vector<std::exception_ptr> errors(battery.size());
  const auto n_cases = static_cast<long>(battery.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n_cases; ++i) {
    try {
      const CapabilityCase& c = battery[static_cast<size_t>(i)];
      CapabilityRow& row = rows[static_cast<size_t>(i)];
      row.name = c.name;
      const DivergenceFreeData data = make_divergence_free_data(*bundle, proj, grid, opt.rho, opt.seed);

      SolverOptions fw;
      fw.exec = Exec::Serial;
      SpectralOperator S(bundle, c.material, opt.rho, grid, fw);
      SolveReport rep;
      S.apply(stack_fields(data.Phi, data.Psi), &rep);
      row.c_min = rep.c_min;
      row.norm_ratio = rep.norm_ratio;
      row.wp0 = rep.c_min > 0.0 && rep.norm_ratio <= 1.02 / rep.c_min;

      CertifyOptions co;
      co.exec = Exec::Serial;
      const DecayCertificate cert = certify_decay(c.material, reduced_curl_sigma(*bundle, proj, c.material), co);
      row.nu0 = cert.nu0;
      if (!cert.certified) {
        row.note = cert.reason;
        continue;
      }
      DecayOptions d;
      const double nu_run = 0.5 * cert.nu0;
      const auto runs = simulate_decay(bundle, c.material, cert, data, {nu_run}, d);
      row.nu_hat = runs.front().fit.nu_hat;
      row.r2 = runs.front().fit.r2;
      row.es0 = row.nu_hat >= 0.8 * nu_run && row.r2 > 0.99;
      row.note = "route " + to_string(cert.route);
    } catch (...) {
      errors[static_cast<size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return rows;
}

std::string format_capability_table(const std::vector<CapabilityRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "model" << std::setw(6) << "WP0" << std::setw(6) << "ES0" << std::setw(12)
     << "c_min" << std::setw(12) << "nu0" << std::setw(12) << "nu_hat" << std::setw(10) << "R2"
     << "note\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(10) << r.name << std::setw(6) << (r.wp0 ? "pass" : "fail") << std::setw(6)
       << (r.es0 ? "pass" : "fail") << std::setw(12) << format_sci(r.c_min) << std::setw(12) << format_sci(r.nu0)
       << std::setw(12) << format_sci(r.nu_hat) << std::setw(10) << std::setprecision(6) << r.r2 << r.note << "\n";
  }
  return os.str();
}

}  // namespace evolab
