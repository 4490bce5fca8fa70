#include "evolab/spectral_solver.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>

namespace evolab {

VecC solver_symbols(const TimeGrid& g, double rho, SymbolKind kind) {
  g.validate();
  const VecR xi = dual_frequencies(g);
  VecC z(g.n);
  for (Eigen::Index m = 0; m < g.n; ++m) {
    const cplx s(rho, xi(m));
    if (kind == SymbolKind::Exact) {
      z(m) = s;
      continue;
    }
    const cplx q = std::exp(-s * g.dt);
    if (std::abs(1.0 + q) < 1e-14) throw FrequencySingular(s, std::numeric_limits<double>::infinity());
    z(m) = (2.0 / g.dt) * (1.0 - q) / (1.0 + q);
  }
  return z;
}

VecC edge_symbol(const OperatorBundle& b, const PiecewiseMaterial& m, cplx z) {
  const cplx a1 = m.law1.z_times(z);
  const cplx a2 = m.law2.z_times(z);
  return (b.edge_w1.array().cast<cplx>() * a1 + (1.0 - b.edge_w1.array()).cast<cplx>() * a2).matrix();
}

VecC face_symbol(const OperatorBundle& b, const PiecewiseMaterial& m, cplx z) {
  return (z * face_mu(b, m).array().cast<cplx>()).matrix();
}

SpectralOperator::SpectralOperator(std::shared_ptr<const OperatorBundle> bundle, const PiecewiseMaterial& material,
                                   double rho, const TimeGrid& grid, SolverOptions opt)
    : bundle_(std::move(bundle)), material_(material), rho_(rho), grid_(grid), opt_(opt) {
  if (!bundle_) throw InvalidArgument("SpectralOperator needs an operator bundle");
  material_.validate();
  symbols_ = solver_symbols(grid_, rho_, opt_.symbol);
  if (opt_.cache_factors) {
    cache_.resize(static_cast<size_t>(grid_.n));
    cache_cond_.assign(static_cast<size_t>(grid_.n), 0.0);
  }
}

SpMatC SpectralOperator::matrix(Eigen::Index m) const {
  const cplx z = symbols_(m);
  const OperatorBundle& b = *bundle_;
  VecC de, dh;
  try {
    de = edge_symbol(b, material_, z);
    dh = face_symbol(b, material_, z);
  } catch (const PoleHit&) {
    throw FrequencySingular(z, std::numeric_limits<double>::infinity());
  }
  SpMatC T = b.A.cast<cplx>();
  std::vector<Eigen::Triplet<cplx>> diag;
  diag.reserve(static_cast<size_t>(b.dim()));
  for (Eigen::Index i = 0; i < b.n_e(); ++i) diag.emplace_back(i, i, de(i));
  for (Eigen::Index i = 0; i < b.n_h(); ++i) diag.emplace_back(b.n_e() + i, b.n_e() + i, dh(i));
  SpMatC D(b.dim(), b.dim());
  D.setFromTriplets(diag.begin(), diag.end());
  T += D;
  T.makeCompressed();
  return T;
}

namespace {

double one_norm(const SpMatC& T) {
  double best = 0.0;
  for (int k = 0; k < T.outerSize(); ++k) {
    double col = 0.0;
    for (SpMatC::InnerIterator it(T, k); it; ++it) col += std::abs(it.value());
    best = std::max(best, col);
  }
  return best;
}

/// Hager's estimate of ||T^{-1}||_1 from solves with T and T^*.
template <class LU>
double inverse_one_norm(LU& lu, Eigen::Index n) {
  VecC x = VecC::Constant(n, cplx(1.0 / static_cast<double>(n)));
  double est = 0.0;
  for (int it = 0; it < 5; ++it) {
    const VecC y = lu.solve(x);
    est = y.lpNorm<1>();
    VecC xi(n);
    for (Eigen::Index i = 0; i < n; ++i) xi(i) = std::abs(y(i)) > 0.0 ? y(i) / std::abs(y(i)) : cplx(1.0);
    const VecC w = lu.adjoint().solve(xi);
    Eigen::Index j = 0;
    const double wmax = w.cwiseAbs().maxCoeff(&j);
    if (wmax <= std::real(w.dot(x))) break;
    x.setZero();
    x(j) = 1.0;
  }
  return est;
}

}  // namespace

std::shared_ptr<SpectralOperator::LU> SpectralOperator::factor(Eigen::Index m, double* cond) const {
  if (opt_.cache_factors && cache_[static_cast<size_t>(m)]) {
    if (cond) *cond = cache_cond_[static_cast<size_t>(m)];
    return cache_[static_cast<size_t>(m)];
  }
  const SpMatC T = matrix(m);
  auto lu = std::make_shared<LU>();
  lu->compute(T);
  if (lu->info() != Eigen::Success) throw FrequencySingular(symbols_(m), std::numeric_limits<double>::infinity());
  double c = 0.0;
  if (opt_.estimate_condition) {
    c = one_norm(T) * inverse_one_norm(*lu, T.rows());
    if (!(c <= opt_.cond_limit)) throw FrequencySingular(symbols_(m), c);
  }
  if (opt_.cache_factors) {
    cache_[static_cast<size_t>(m)] = lu;
    cache_cond_[static_cast<size_t>(m)] = c;
  }
  if (cond) *cond = c;
  return lu;
}

VecC SpectralOperator::solve_one(Eigen::Index m, const VecC& b, double* cond, double* residual) const {
  auto lu = factor(m, cond);
  const double bn = b.norm();
  if (bn == 0.0) {
    *residual = 0.0;
    return VecC::Zero(b.size());
  }
  const SpMatC T = matrix(m);
  VecC x = lu->solve(b);
  VecC r = b - T * x;
  double rel = r.norm() / bn;
  if (rel > opt_.residual_tol) {
    x += lu->solve(r);
    r = b - T * x;
    rel = r.norm() / bn;
  }
  if (!(rel <= opt_.residual_tol)) {
    throw LinearSolveFailure("per-frequency residual " + format_sci(rel) + " above tolerance");
  }
  *residual = rel;
  return x;
}

MatC SpectralOperator::apply_spectral(const MatC& g_hat, SolveReport* report) const {
  if (g_hat.rows() != grid_.n || g_hat.cols() != bundle_->dim()) {
    throw InvalidArgument("spectral data shape does not match the operator");
  }
  const Eigen::Index n = grid_.n;
  MatC out(n, g_hat.cols());
  VecR cond = VecR::Zero(n);
  VecR res = VecR::Zero(n);
  std::vector<std::exception_ptr> errors(static_cast<size_t>(n));
  auto body = [&](Eigen::Index m) {
    try {
      out.row(m) = solve_one(m, g_hat.row(m).transpose(), &cond(m), &res(m)).transpose();
    } catch (...) {
      errors[static_cast<size_t>(m)] = std::current_exception();
    }
  };
  if (opt_.exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (Eigen::Index m = 0; m < n; ++m) body(m);
  } else {
    for (Eigen::Index m = 0; m < n; ++m) body(m);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  if (report) {
    report->rho = rho_;
    if (opt_.estimate_condition) report->condition = cond;
    report->max_condition = cond.maxCoeff();
    report->max_residual = res.maxCoeff();
  }
  return out;
}

WeightedSignal SpectralOperator::apply(const WeightedSignal& g, SolveReport* report) const {
  if (g.rho != rho_) throw WeightMismatch("right-hand side weight differs from the solver weight");
  if (!(g.grid == grid_)) throw InvalidArgument("right-hand side grid differs from the solver grid");
  SpectralSignal G = fourier_laplace(g, opt_.exec);
  G.values = apply_spectral(G.values, report);
  WeightedSignal u = inverse_fourier_laplace(G, opt_.wrap_tol, opt_.exec);
  const double wrap = wraparound_residual(u);
  if (wrap > opt_.wrap_tol) {
    throw WraparoundExceeded("solution has not decayed at the window end (residual " + format_sci(wrap) + ")");
  }
  if (report) {
    report->c_min = line_c_min();
    const double gn = weighted_norm(g);
    report->norm_ratio = gn > 0.0 ? weighted_norm(u) / gn : 0.0;
    report->wrap_residual = wrap;
  }
  return u;
}

double SpectralOperator::line_c_min() const {
  double c = std::numeric_limits<double>::infinity();
  for (Eigen::Index m = 0; m < symbols_.size(); ++m) {
    const cplx z = symbols_(m);
    c = std::min(c, edge_symbol(*bundle_, material_, z).real().minCoeff());
    c = std::min(c, face_symbol(*bundle_, material_, z).real().minCoeff());
  }
  return c;
}

double SpectralOperator::inverse_norm_max(int iterations) const {
  const Eigen::Index n = grid_.n;
  VecR est = VecR::Zero(n);
  std::vector<std::exception_ptr> errors(static_cast<size_t>(n));
  auto body = [&](Eigen::Index m) {
    try {
      auto lu = factor(m, nullptr);
      std::mt19937_64 rng(static_cast<std::uint64_t>(m) + 1);
      std::normal_distribution<double> nd;
      VecC x(bundle_->dim());
      for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = cplx(nd(rng), nd(rng));
      x.normalize();
      double s = 0.0;
      for (int it = 0; it < iterations; ++it) {
        const VecC y = lu->solve(x);
        s = y.norm();
        x = lu->adjoint().solve(y);
        x.normalize();
      }
      est(m) = s;
    } catch (...) {
      errors[static_cast<size_t>(m)] = std::current_exception();
    }
  };
  if (opt_.exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (Eigen::Index m = 0; m < n; ++m) body(m);
  } else {
    for (Eigen::Index m = 0; m < n; ++m) body(m);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return est.maxCoeff();
}

WeightedSignal solve_linear(const LinearProblem& p, SolveReport* report, SolverOptions opt) {
  if (!p.bundle) throw InvalidArgument("LinearProblem needs an operator bundle");
  if (p.rhs.dim() != p.bundle->dim()) throw InvalidArgument("right-hand side dimension differs from dim(A)");
  SpectralOperator S(p.bundle, p.material, p.rho, p.rhs.grid, opt);
  return S.apply(reweighted(p.rhs, p.rho), report);
}

double verify_causality(const LinearProblem& p, double a, SolverOptions opt) {
  LinearProblem q = p;
  q.rhs = truncate_after(reweighted(p.rhs, p.rho), a);
  opt.wrap_tol = kNoWrapCheck;
  const WeightedSignal u = solve_linear(q, nullptr, opt);
  const VecR norms = sample_norms(u);
  const double peak = norms.maxCoeff();
  if (peak == 0.0) return 0.0;
  double pre = 0.0;
  for (Eigen::Index k = 0; k < u.n(); ++k) {
    if (u.grid.t(k) <= a) pre = std::max(pre, norms(k));
  }
  return pre / peak;
}

double verify_rho_independence(const LinearProblem& p, double rho1, double rho2, SolverOptions opt) {
  if (!(rho1 > 0.0) || !(rho2 > 0.0)) throw NonPositiveWeight("rho-independence check needs forward weights");
  const double lo = std::min(rho1, rho2);
  auto solve_on = [&](double rho) {
    const auto n = static_cast<Eigen::Index>(std::llround(static_cast<double>(p.rhs.n()) * lo / rho));
    TimeGrid g = p.rhs.grid;
    g.n = n;
    LinearProblem q = p;
    q.rho = rho;
    q.rhs = WeightedSignal(g, rho, MatC(p.rhs.values.topRows(n)), p.rhs.wrap_tol);
    return solve_linear(q, nullptr, opt);
  };
  const WeightedSignal u1 = solve_on(rho1);
  const WeightedSignal u2 = solve_on(rho2);
  const Eigen::Index n = std::min(u1.n(), u2.n());
  const double base = u1.values.topRows(n).norm();
  if (base == 0.0) return u2.values.topRows(n).norm() == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return (u1.values.topRows(n) - u2.values.topRows(n)).norm() / base;
}

WeightedSignal spectral_derivative(const WeightedSignal& u, Exec exec) {
  WeightedSignal v = u;
  v.wrap_tol = kNoWrapCheck;
  SpectralSignal U = fourier_laplace(v, exec);
  for (Eigen::Index m = 0; m < U.values.rows(); ++m) U.values.row(m) *= cplx(U.rho, U.xi(m));
  return inverse_fourier_laplace(U, u.wrap_tol, exec);
}

double verify_time_regularity(const LinearProblem& p, SolverOptions opt) {
  opt.wrap_tol = kNoWrapCheck;
  SpectralOperator S(p.bundle, p.material, p.rho, p.rhs.grid, opt);
  const WeightedSignal g = reweighted(p.rhs, p.rho);
  const WeightedSignal du = spectral_derivative(S.apply(g), opt.exec);
  WeightedSignal dg = spectral_derivative(g, opt.exec);
  dg.wrap_tol = kNoWrapCheck;
  const WeightedSignal v = S.apply(dg);
  const double base = weighted_norm(du);
  if (base == 0.0) return weighted_norm(v);
  return weighted_norm(v - du) / base;
}

WeightedSignal second_order_solve(const EFieldProblem& p, SolverOptions opt) {
  if (!p.bundle) throw InvalidArgument("EFieldProblem needs an operator bundle");
  const OperatorBundle& b = *p.bundle;
  if (p.phi.dim() != b.n_e() || p.psi.dim() != b.n_h()) throw InvalidArgument("field data dimensions mismatch");
  require_compatible(reweighted(p.phi, p.rho), WeightedSignal(p.psi.grid, p.rho, p.phi.dim()));
  p.material.validate();
  const TimeGrid& grid = p.phi.grid;
  const VecC z = solver_symbols(grid, p.rho, opt.symbol);
  const VecR mu = face_mu(b, p.material);
  const SpMatR Cmu = b.C * VecR(mu.cwiseInverse()).asDiagonal();
  const SpMatC K = (Cmu * b.C0).cast<cplx>();
  const SpMatC Cmu_c = Cmu.cast<cplx>();
  const SpectralSignal F = fourier_laplace(reweighted(p.phi, p.rho), opt.exec);
  const SpectralSignal G = fourier_laplace(reweighted(p.psi, p.rho), opt.exec);
  MatC out(grid.n, b.n_e());
  std::vector<std::exception_ptr> errors(static_cast<size_t>(grid.n));
  auto body = [&](Eigen::Index m) {
    try {
      VecC d;
      try {
        d = z(m) * edge_symbol(b, p.material, z(m));
      } catch (const PoleHit&) {
        throw FrequencySingular(z(m), std::numeric_limits<double>::infinity());
      }
      SpMatC T = K;
      for (Eigen::Index i = 0; i < b.n_e(); ++i) T.coeffRef(i, i) += d(i);
      T.makeCompressed();
      const VecC rhs = z(m) * F.values.row(m).transpose() + Cmu_c * G.values.row(m).transpose();
      Eigen::SparseLU<SpMatC, Eigen::COLAMDOrdering<int>> lu(T);
      if (lu.info() != Eigen::Success) throw FrequencySingular(z(m), std::numeric_limits<double>::infinity());
      VecC x = lu.solve(rhs);
      const double bn = rhs.norm();
      if (bn > 0.0) {
        VecC r = rhs - T * x;
        if (r.norm() > opt.residual_tol * bn) {
          x += lu.solve(r);
          r = rhs - T * x;
        }
        if (!(r.norm() <= opt.residual_tol * bn)) throw LinearSolveFailure("second-order residual above tolerance");
      }
      out.row(m) = x.transpose();
    } catch (...) {
      errors[static_cast<size_t>(m)] = std::current_exception();
    }
  };
  if (opt.exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (Eigen::Index m = 0; m < grid.n; ++m) body(m);
  } else {
    for (Eigen::Index m = 0; m < grid.n; ++m) body(m);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  SpectralSignal E = F;
  E.values = std::move(out);
  WeightedSignal e = inverse_fourier_laplace(E, opt.wrap_tol, opt.exec);
  const double wrap = wraparound_residual(e);
  if (wrap > opt.wrap_tol) throw WraparoundExceeded("E field has not decayed at the window end");
  return e;
}

WeightedSignal stack_fields(const WeightedSignal& e, const WeightedSignal& h) {
  if (e.rho != h.rho) throw WeightMismatch("field blocks carry different weights");
  if (!(e.grid == h.grid)) throw InvalidArgument("field blocks live on different grids");
  MatC v(e.n(), e.dim() + h.dim());
  v << e.values, h.values;
  return WeightedSignal(e.grid, e.rho, std::move(v), std::max(e.wrap_tol, h.wrap_tol));
}

WeightedSignal field_block(const WeightedSignal& u, Eigen::Index first, Eigen::Index count) {
  if (first < 0 || count < 0 || first + count > u.dim()) throw InvalidArgument("column block out of range");
  return WeightedSignal(u.grid, u.rho, MatC(u.values.middleCols(first, count)), u.wrap_tol);
}

}  // namespace evolab
