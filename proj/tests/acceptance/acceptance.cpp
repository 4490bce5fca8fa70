// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <Eigen/SVD>
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "evolab/history.hpp"
#include "evolab/oracle_stepper.hpp"
#include "evolab/stability.hpp"

using namespace evolab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

PiecewiseMaterial two_dl() {
  PiecewiseMaterial m;
  m.law1 = ScalarLaw::drude_lorentz({1.0, {{1.0, 0.5, 2.0}}});
  m.law2 = ScalarLaw::drude_lorentz({2.0, {{0.5, 0.3, 3.0}}});
  return m;
}

std::shared_ptr<OperatorBundle> box(int cells, double extent = 1.0) {
  YeeGrid g;
  g.extents = {extent, extent, extent};
  g.n_cells = {cells, cells, cells};
  g.interface_index = cells / 2;
  return std::make_shared<OperatorBundle>(build_curl_pair(g));
}

VecC random_profile(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  VecC v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = nd(rng);
  return v;
}

/// profile * sin^4 on (t_on, t_on + duration).
WeightedSignal pulse(const TimeGrid& g, double rho, const VecC& profile, double t_on, double duration,
                     double tol = kDefaultWrapTol) {
  WeightedSignal s(g, rho, profile.size(), tol);
  for (Eigen::Index k = 0; k < g.n; ++k) {
    const double t = g.t(k) - t_on;
    if (t > 0.0 && t < duration) s.values.row(k) = std::pow(std::sin(M_PI * t / duration), 4) * profile.transpose();
  }
  return s;
}

Outcome skew_adjoint() {
  double worst = 0.0;
  for (int cells : {4, 8}) {
    const auto b = box(cells);
    worst = std::max(worst, SpMatR(b->A + SpMatR(b->A.transpose())).norm());
  }
  return {worst == 0.0, fmt("max ||A + A^T|| over 4^3 and 8^3 = %.3g", worst)};
}

Outcome closed_forms() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.1, 3.0), nu(-0.05, 3.0), t(-100.0, 100.0);
  double worst = 0.0;
  for (int set = 0; set < 5; ++set) {
    DrudeLorentzParams p;
    p.eps0 = u(rng);
    for (int j = 0; j < 2; ++j) {
      const double gamma = u(rng);
      p.terms.push_back({u(rng), gamma, gamma + u(rng)});
    }
    for (int i = 0; i < 10000; ++i) {
      const cplx z(nu(rng), t(rng));
      const double direct = (z * (p.eps0 + eval_chi_dl(z, p))).real();
      const double closed = re_zM_closed_form(z.real(), z.imag(), p);
      worst = std::max(worst, std::abs(closed - direct) / std::max(1.0, std::abs(direct)));
    }
  }
  double limit_gap = 0.0;
  for (const ModDLParams& p : {ModDLParams{{1.0, {{1.0, 1.0, 2.0}}}, 3.0, 0.0},
                               ModDLParams{{2.0, {{0.7, 2.0, 2.5}}}, 5.0, 0.0}}) {
    const double target = p.base.terms.front().alpha / p.r;
    for (double n : {0.0, 0.05, 0.2}) {
      for (double tt : {1e6, -1e6}) {
        limit_gap = std::max(limit_gap, std::abs(mod_dl_g(n, tt, p) - target) / target);
      }
    }
  }
  return {worst <= 1e-12 && limit_gap <= 1e-6,
          fmt("max rel gap %.2e over 5 x 1e4 points; g limit rel gap %.2e", worst, limit_gap)};
}

Outcome picard_norm_bound() {
  const auto b = box(4);
  const TimeGrid g{0.0, 0.05, 256};
  SolverOptions o;
  o.wrap_tol = kNoWrapCheck;
  o.cache_factors = true;
  o.estimate_condition = false;
  const SpectralOperator S(b, two_dl(), 1.0, g, o);
  const double c_min = S.line_c_min();
  std::mt19937_64 rng(50);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> dur(0.5, 4.0);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    WeightedSignal rhs(g, 1.0, b->dim(), kNoWrapCheck);
    if (i % 2 == 0) {
      rhs = pulse(g, 1.0, random_profile(b->dim(), rng), 0.0, dur(rng), kNoWrapCheck);
    } else {
      for (Eigen::Index k = 0; k < g.n / 2; ++k) {
        for (Eigen::Index j = 0; j < b->dim(); ++j) rhs.values(k, j) = cplx(nd(rng), nd(rng));
      }
    }
    SolveReport rep;
    S.apply(rhs, &rep);
    worst = std::max(worst, rep.norm_ratio);
  }
  return {c_min > 0.0 && worst <= 1.02 / c_min,
          fmt("max ||S g|| / ||g|| = %.4g, 1/c_min = %.4g", worst, 1.0 / c_min)};
}

Outcome causality() {
  const auto b = box(4);
  std::mt19937_64 rng(4);
  const TimeGrid g{-2.0, 0.02, 1024};
  double worst = 0.0;
  for (Eigen::Index k0 : {200, 400, 700}) {
    WeightedSignal src(g, 2.0, b->dim());
    src.values.row(k0) = random_profile(b->dim(), rng).transpose() / g.dt;
    worst = std::max(worst, verify_causality({b, two_dl(), 2.0, src}, g.t(k0) - 1e-9));
  }
  return {worst < 1e-8, fmt("max pre-support / peak = %.2e over three impulses", worst)};
}

Outcome rho_independence() {
  const auto b = box(4);
  std::mt19937_64 rng(5);
  const TimeGrid g{0.0, 0.02, 1100};
  const LinearProblem p{b, two_dl(), 1.0, pulse(g, 1.0, random_profile(b->dim(), rng), 0.0, 2.0)};
  const double gap = verify_rho_independence(p, 1.0, 2.0);
  return {gap < 1e-6, fmt("relative gap between rho = 1 and rho = 2: %.2e", gap)};
}

Outcome oracle_equivalence() {
  const auto b = box(4);
  const PiecewiseMaterial m = two_dl();
  std::mt19937_64 rng(1);
  VecC profile = VecC::Zero(b->dim());
  profile.head(b->n_e()) = random_profile(b->n_e(), rng);
  const double rho = 40.0;
  std::vector<double> gaps;
  for (int level = 0; level < 3; ++level) {
    const double dt = 4e-3 / (1 << level);
    const TimeGrid g{0.0, dt, static_cast<Eigen::Index>(256) << level};
    const WeightedSignal src = pulse(g, rho, profile, 0.0, 0.4);
    const WeightedSignal u = solve_linear({b, m, rho, src});
    const OracleStepper os(b, m, dt);
    WeightedSignal v = os.run(os.zero_state(0.0), src);
    v.rho = rho;
    gaps.push_back(weighted_norm(u - v) / weighted_norm(v));
  }
  const double order = std::log2(gaps[1] / gaps[2]);
  return {gaps[2] < 1e-3 && order > 1.8 && order < 2.2,
          fmt("gap at dt = 1e-3: %.2e, observed order %.3f (dt = 4e-3 gap %.2e)", gaps[2], order, gaps[0])};
}

Outcome contraction_rate() {
  const auto b = box(4);
  std::mt19937_64 rng(1);
  const TimeGrid g{0.0, 0.02, 512};
  const KernelSpec k = KernelSpec::exponential(2.0, 1.0, g);
  const SaturableQ q{2, 1.0};
  LinearProblem p{b, two_dl(), 8.0, pulse(g, 8.0, random_profile(b->dim(), rng), 0.0, 2.0)};
  const double rho = rho_for_bound(p, k, q, 0.5);
  p.rho = rho;
  p.rhs = reweighted(p.rhs, rho);
  double worst = 0.0, bound = 0.0;
  bool ok = true;
  for (double amp : {1.0, 10.0, 100.0}) {
    LinearProblem scaled = p;
    scaled.rhs.values *= amp;
    const auto [u, cert] = picard_solve(scaled, k, q);
    worst = std::max(worst, cert.empirical_ratio);
    bound = cert.theoretical_bound;
    ok = ok && cert.converged;
  }
  return {ok && std::abs(bound - 0.5) < 1e-6 && worst <= bound * 1.05,
          fmt("rho = %.4g, bound %.4f, worst measured rate %.4f", rho, bound, worst)};
}

Outcome cutoff_lipschitz() {
  const auto b = box(4);
  const Eigen::Index n_e = b->n_e();
  const TimeGrid g{0.0, 0.02, 256};
  const double rho = 0.5, T = 3.0;
  const SeparableKernel K = SeparableKernel::exponential(2, 1.0, 0.7, g);
  const LowRankMultilinear q = LowRankMultilinear::random(n_e, 2, 2, 4, 11);
  const double C = cutoff_lipschitz_constant(kernel_constants(K, rho), q.bound(), T, rho, 2);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> scale(-3.0, 3.0);
  auto random_field = [&]() {
    WeightedSignal s(g, rho, b->dim(), kNoWrapCheck);
    const double a = std::pow(10.0, scale(rng));
    for (Eigen::Index k = 1; k < g.n; ++k) {
      for (Eigen::Index j = 0; j < n_e; ++j) s.values(k, j) = a * cplx(nd(rng), nd(rng));
    }
    return s;
  };
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const WeightedSignal u = random_field(), v = random_field();
    const double lhs = weighted_norm(apply_P_multi(K, q, u, n_e, T) - apply_P_multi(K, q, v, n_e, T));
    worst = std::max(worst, lhs / ((weighted_norm(u) + weighted_norm(v)) * weighted_norm(u - v)));
  }
  return {worst <= C, fmt("max measured factor %.4g vs bound %.4g", worst, C)};
}

Outcome schur_inheritance() {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<int> size(2, 10);
  std::uniform_real_distribution<double> floor(0.01, 2.0);
  double deficit = -std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = size(rng);
    const Eigen::Index k = std::uniform_int_distribution<Eigen::Index>(1, n - 1)(rng);
    const double d = floor(rng);
    MatC X(n, n), Y(n, n);
    for (Eigen::Index i = 0; i < n * n; ++i) {
      X.data()[i] = cplx(nd(rng), nd(rng));
      Y.data()[i] = cplx(nd(rng), nd(rng));
    }
    const MatC T = X * X.adjoint() / static_cast<double>(n) + d * MatC::Identity(n, n) + 3.0 * (Y - Y.adjoint());
    const SchurMargins s = schur_accretivity_check(T, k);
    deficit = std::max({deficit, d - s.margin11, d - s.margin_schur});
  }
  return {deficit < 1e-10, fmt("largest deficit d - margin over 200 matrices: %.3g", deficit)};
}

Outcome poincare() {
  const OperatorBundle b = build_curl_pair(YeeGrid{});
  const PoincareReport r = poincare_constant(b, helmholtz_projections(b));
  const VecR s = Eigen::JacobiSVD<MatR>(MatR(b.C0)).singularValues();
  double smallest = s(0);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > 1e-8 * s(0)) smallest = std::min(smallest, s(i));
  }
  const double gap = std::abs(r.sigma_min - smallest) / smallest;
  return {r.sigma_min > 0.0 && gap <= 1e-8, fmt("sigma_min %.12g, dense SVD %.12g, rel gap %.2e", r.sigma_min,
                                               smallest, gap)};
}

Outcome stability() {
  YeeGrid grid;
  grid.extents = {2.0, 2.0, 2.0};
  const auto b = std::make_shared<OperatorBundle>(build_curl_pair(grid));
  const ProjectionBasis p = helmholtz_projections(*b);
  const auto battery = default_battery();
  const PiecewiseMaterial& dl = battery[0].material;
  const PiecewiseMaterial& mod = battery[1].material;
  const bool strict = mod.law1.model == LawModel::ModDL &&
                     ModDLParams{mod.law1.dl, mod.law1.r, 0.0}.strictly_accretive();

  const DecayCertificate mod_cert = certify_decay(mod, reduced_curl_sigma(*b, p, mod));
  const DecayCertificate dl_cert = certify_decay(dl, reduced_curl_sigma(*b, p, dl));
  const TimeGrid tg{0.0, 0.1, 1024};
  const DivergenceFreeData data = make_divergence_free_data(*b, p, tg, 1.0, 7, 4.0);
  bool refused = false;
  try {
    simulate_decay(b, dl, dl_cert, data, {0.05});
  } catch (const NotCertified&) {
    refused = true;
  }
  double nu_run = 0.0, nu_hat = 0.0, r2 = 0.0;
  if (mod_cert.certified) {
    nu_run = 0.5 * mod_cert.nu0;
    const DecayRun run = simulate_decay(b, mod, mod_cert, data, {nu_run}).front();
    nu_hat = run.fit.nu_hat;
    r2 = run.fit.r2;
  }
  CapabilityOptions co;
  co.grid = grid;
  const auto rows = capability_matrix({battery[0], battery[1]}, co);
  const bool pattern = rows[0].wp0 && !rows[0].es0 && rows[1].wp0 && rows[1].es0;
  const bool ok = strict && mod_cert.certified && mod_cert.nu0 > 0.0 && nu_hat >= 0.8 * nu_run && r2 > 0.99 &&
                  !dl_cert.certified && refused && pattern;
  std::string detail = fmt("mod-DL nu0 %.4g, nu_run %.4g, nu_hat %.4g", mod_cert.nu0, nu_run, nu_hat) +
                       fmt(", R^2 %.5f; DL certified %g", r2, dl_cert.certified ? 1.0 : 0.0) +
                       (refused ? ", DL run refused" : ", DL run not refused") +
                       (pattern ? ", matrix pattern ok" : ", matrix pattern wrong");
  return {ok, detail};
}

Outcome divergence_conservation() {
  const auto b = box(4);
  const ProjectionBasis p = helmholtz_projections(*b);
  PiecewiseMaterial m = two_dl();
  m.mu1 = 1.0;
  m.mu2 = 2.5;
  const TimeGrid g{0.0, 0.05, 1024};
  // A small weight keeps exp(rho t) rounding growth below the tolerance on the whole window.
  const double rho = 0.1;
  const DivergenceFreeData data = make_divergence_free_data(*b, p, g, rho, 12, 0.0, 3.0);
  SolverOptions o;
  o.wrap_tol = kNoWrapCheck;
  const WeightedSignal u = solve_linear({b, m, rho, stack_fields(data.Phi, data.Psi)}, nullptr, o);
  const VecR div = divergence_diagnostics(*b, u, face_mu(*b, m));
  const double H_norm = sample_norms(field_block(u, b->n_e(), b->n_h())).maxCoeff();
  const double ratio = div.maxCoeff() / H_norm;
  return {ratio <= 1e-8, fmt("max_t ||Div(mu H)(t)|| / max_t ||H(t)|| = %.2e", ratio)};
}

Outcome history_pipeline() {
  const auto b = box(4);
  const PiecewiseMaterial m = two_dl();
  const double dt = 0.01;
  std::mt19937_64 rng(1);
  const double window = default_history_window(m);
  const auto n_hist = static_cast<Eigen::Index>(std::llround(window / dt)) + 1;
  const TimeGrid hg{-static_cast<double>(n_hist - 1) * dt, dt, n_hist};
  const WeightedSignal drive = pulse(hg, 0.0, random_profile(b->dim(), rng), -3.0, 2.0, kNoWrapCheck);
  const OracleStepper os(b, m, dt);
  const WeightedSignal hist = os.run(os.zero_state(hg.t_start), drive);
  const HistorySpec h = HistorySpec::from_samples(hist, true);

  const double rho = 2.0;
  const auto n_pre = static_cast<Eigen::Index>(std::llround(0.5 / dt));
  const Eigen::Index n = n_pre + static_cast<Eigen::Index>(std::llround(10.0 / dt));
  const TimeGrid g{-static_cast<double>(n_pre) * dt, dt, n};
  const auto inh = build_maxwell_inhomogeneity(h, BumpSpec::polynomial(1.0, dt), *b, m, g, rho);
  const SpectralOperator S(b, m, rho, g);
  const WeightedSignal u_tilde = S.apply(stack_fields(inh.Phi, inh.Psi));
  double pre = 0.0, peak = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double v = u_tilde.values.row(k).norm();
    peak = std::max(peak, v);
    if (g.t(k) <= 1e-12) pre = std::max(pre, v);
  }
  const WeightedSignal U = reconstruct_solution(u_tilde, h, inh.phi_plus);
  bool exact = true;
  for (Eigen::Index k = 0; k <= n_pre; ++k) exact = exact && U.values.row(k) == hist.values.row(n_hist - 1 - n_pre + k);
  const TimeGrid og{0.0, dt, n - n_pre};
  const WeightedSignal cont = os.run(os.state_from_history(hist), WeightedSignal(og, rho, b->dim(), kNoWrapCheck));
  const double gap = (U.values.bottomRows(og.n) - cont.values).norm() / cont.values.norm();
  return {exact && pre <= 1e-8 * peak && gap < 1e-3,
          fmt("history copy exact %g, pre-support %.2e, gap vs stepper %.2e", exact ? 1.0 : 0.0, pre / peak, gap)};
}

Outcome small_ball() {
  YeeGrid grid;
  grid.extents = {2.0, 2.0, 2.0};
  const auto b = std::make_shared<OperatorBundle>(build_curl_pair(grid));
  const ProjectionBasis p = helmholtz_projections(*b);
  const PiecewiseMaterial m = default_battery()[1].material;
  const double nu = 0.05;
  const TimeGrid tg{0.0, 0.1, 1024};
  SolverOptions so;
  so.symbol = SymbolKind::Exact;
  so.wrap_tol = 1e-5;
  so.cache_factors = true;
  const SpectralOperator S(b, m, -nu, tg, so);
  const RestrictedGain rg = restricted_gain(S, p);
  const NonlinearMap N = projected_quadratic_source(p, b->n_e(), 1.0);
  const double C = projected_quadratic_constant(1.0, tg, nu);
  const double eps = 1.0 / (4.0 * rg.gain * C), c0 = 1.0 / (4.0 * rg.gain);

  const DivergenceFreeData data = make_divergence_free_data(*b, p, tg, -nu, 7);
  WeightedSignal random_data = stack_fields(data.Phi, data.Psi);
  WeightedSignal aligned = aligned_data(S, rg, 0.0, 4.0);
  bool confined = true, escaped = true;
  double worst = 0.0, radius = 0.0;
  for (WeightedSignal* gp : {&random_data, &aligned}) {
    gp->wrap_tol = 1e-5;
    gp->values *= 0.5 * c0 * eps / weighted_norm(*gp);
    const auto [u, cert] = ball_solve(S, *gp, N, rg.gain, C);
    radius = cert.radius;
    for (double v : cert.norms) worst = std::max(worst, v);
    confined = confined && cert.converged;
    WeightedSignal big = *gp;
    big.values *= 100.0;
    try {
      ball_solve(S, big, N, rg.gain, C);
      escaped = false;
    } catch (const BallEscape&) {
    }
  }
  confined = confined && worst <= radius;
  return {confined && escaped, fmt("K %.4g, C %.4g, max iterate norm %.3e", rg.gain, C, worst) +
                                   fmt(" within radius %.3e; 100x data escapes: %g", radius, escaped ? 1.0 : 0.0)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"skew-adjoint A", skew_adjoint},
      {"closed forms", closed_forms},
      {"Picard norm bound", picard_norm_bound},
      {"causality", causality},
      {"weight independence", rho_independence},
      {"oracle equivalence", oracle_equivalence},
      {"contraction rate", contraction_rate},
      {"cutoff local Lipschitz", cutoff_lipschitz},
      {"Schur accretivity", schur_inheritance},
      {"discrete Poincare", poincare},
      {"exponential stability", stability},
      {"divergence conservation", divergence_conservation},
      {"history pipeline", history_pipeline},
      {"small-ball stability", small_ball},
  };
  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %2zu %-24s %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
