#include "evolab/nonlinear.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <random>

namespace evolab {

KernelSpec KernelSpec::exponential(double amplitude, double decay, const TimeGrid& grid, double rho_kappa) {
  return from_terms({ExpTerm{cplx(-decay, 0.0), cplx(amplitude, 0.0)}}, grid, rho_kappa);
}

KernelSpec KernelSpec::from_terms(const std::vector<ExpTerm>& terms, const TimeGrid& grid, double rho_kappa) {
  grid.validate();
  KernelSpec k;
  k.rho_kappa = rho_kappa;
  k.kappa.dt = grid.dt;
  k.kappa_prime.dt = grid.dt;
  k.kappa.values = VecC::Zero(grid.n);
  k.kappa_prime.values = VecC::Zero(grid.n);
  for (const auto& e : terms) {
    for (Eigen::Index m = 0; m < grid.n; ++m) {
      const cplx v = e.coeff * std::exp(e.lambda * (grid.dt * static_cast<double>(m)));
      k.kappa.values(m) += v.real();
      k.kappa_prime.values(m) += (e.lambda * v).real();
    }
    k.kappa_at_0plus += e.coeff.real();
  }
  k.L_kappa = compute_L_kappa(k);
  return k;
}

double compute_L_kappa(const KernelSpec& k) {
  const VecC& d = k.kappa_prime.values;
  const Eigen::Index n = d.size();
  if (n < 2) return 0.0;
  double acc = 0.0;
  for (Eigen::Index m = 0; m < n; ++m) {
    const double w = (m == 0 || m == n - 1) ? 0.5 : 1.0;
    acc += w * std::abs(d(m)) * std::exp(-k.rho_kappa * k.kappa_prime.dt * static_cast<double>(m));
  }
  return acc * k.kappa_prime.dt;
}

void SaturableQ::validate() const {
  if (k < 2) throw InvalidArgument("saturable exponent k must be >= 2");
  if (!(tau > 0.0)) throw InvalidArgument("saturation tau must be positive");
}

cplx SaturableQ::operator()(cplx u) const {
  const double s = std::pow(std::abs(u), k - 1);
  return s / (1.0 + tau * s) * u;
}

double SaturableQ::lipschitz() const {
  validate();
  const double kk = static_cast<double>(k);
  return std::max(1.0, kk * kk / (4.0 * (kk - 1.0))) / tau;
}

ScalarMap SaturableQ::map() const {
  validate();
  return [q = *this](cplx u) { return q(u); };
}

WeightedSignal apply_pointwise(const ScalarMap& q, const WeightedSignal& u, Eigen::Index n_e, Exec exec) {
  if (n_e > u.dim()) throw InvalidArgument("edge block larger than the signal");
  WeightedSignal out(u.grid, u.rho, u.dim(), u.wrap_tol);
  const Eigen::Index n = u.n();
  auto row = [&](Eigen::Index k) {
    for (Eigen::Index j = 0; j < n_e; ++j) out.values(k, j) = q(u.values(k, j));
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (Eigen::Index k = 0; k < n; ++k) row(k);
  } else {
    for (Eigen::Index k = 0; k < n; ++k) row(k);
  }
  return out;
}

namespace {

WeightedSignal edge_part(const WeightedSignal& u, Eigen::Index n_e) {
  return WeightedSignal(u.grid, u.rho, MatC(u.values.leftCols(n_e)), u.wrap_tol);
}

WeightedSignal pad_to(const WeightedSignal& e, Eigen::Index dim) {
  WeightedSignal out(e.grid, e.rho, dim, e.wrap_tol);
  out.values.leftCols(e.dim()) = e.values;
  return out;
}

SampledKernel fit_kernel(const SampledKernel& k, Eigen::Index n) {
  SampledKernel out = k;
  if (out.values.size() > n) out.values.conservativeResize(n);
  return out;
}

}  // namespace

WeightedSignal apply_P_nl(const KernelSpec& k, const ScalarMap& q, const WeightedSignal& u, Eigen::Index n_e,
                          Exec exec) {
  const WeightedSignal qE = edge_part(apply_pointwise(q, u, n_e, exec), n_e);
  return pad_to(causal_convolve(fit_kernel(k.kappa, u.n()), qE, exec), u.dim());
}

WeightedSignal apply_dt_P_nl(const KernelSpec& k, const ScalarMap& q, const WeightedSignal& u, Eigen::Index n_e,
                             Exec exec) {
  const WeightedSignal qE = edge_part(apply_pointwise(q, u, n_e, exec), n_e);
  WeightedSignal d = causal_convolve(fit_kernel(k.kappa_prime, u.n()), qE, exec);
  d.values += k.kappa_at_0plus * qE.values;
  return pad_to(d, u.dim());
}

double LowRankMultilinear::bound() const {
  double c = 0.0;
  for (size_t s = 0; s < W.size(); ++s) {
    double t = Eigen::JacobiSVD<MatR>(W[s]).singularValues()(0);
    for (const MatR& m : L[s]) t *= Eigen::JacobiSVD<MatR>(m).singularValues()(0);
    c += t;
  }
  return c;
}

VecC LowRankMultilinear::apply(const std::vector<VecC>& args) const {
  if (static_cast<int>(args.size()) != order) throw InvalidArgument("multilinear form called with wrong arity");
  VecC out = VecC::Zero(W.empty() ? 0 : W.front().rows());
  for (size_t s = 0; s < W.size(); ++s) {
    VecC prod = VecC::Ones(W[s].cols());
    for (int i = 0; i < order; ++i) prod.array() *= (L[s][static_cast<size_t>(i)].cast<cplx>() * args[static_cast<size_t>(i)]).array();
    out += W[s].cast<cplx>() * prod;
  }
  return out;
}

LowRankMultilinear LowRankMultilinear::random(Eigen::Index n_e, int order, int terms, int rank, std::uint64_t seed,
                                              double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  auto draw = [&](Eigen::Index r, Eigen::Index c) {
    MatR m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
    return MatR(m / std::sqrt(static_cast<double>(c)));
  };
  LowRankMultilinear q;
  q.order = order;
  for (int s = 0; s < terms; ++s) {
    q.W.push_back(scale * draw(n_e, rank));
    std::vector<MatR> f;
    for (int i = 0; i < order; ++i) f.push_back(draw(rank, n_e));
    q.L.push_back(std::move(f));
  }
  return q;
}

SeparableKernel SeparableKernel::exponential(int order, double amplitude, double decay, const TimeGrid& grid) {
  SeparableKernel K;
  K.dt = grid.dt;
  std::vector<VecR> f;
  for (int i = 0; i < order; ++i) {
    VecR a(grid.n);
    for (Eigen::Index m = 0; m < grid.n; ++m) a(m) = std::exp(-decay * grid.dt * static_cast<double>(m));
    if (i == 0) a *= amplitude;
    f.push_back(a);
  }
  K.factors.push_back(std::move(f));
  return K;
}

namespace {

double trap_weight(Eigen::Index m, Eigen::Index n) { return (m == 0 || m == n - 1) ? 0.5 : 1.0; }

}  // namespace

KernelConstants kernel_constants(const SeparableKernel& K, double rho_K) {
  KernelConstants c;
  const int n_ord = K.order();
  if (n_ord == 0) return c;
  const double dt = K.dt;
  auto weighted = [&](const VecR& a) {
    VecR w(a.size());
    for (Eigen::Index m = 0; m < a.size(); ++m) w(m) = std::abs(a(m)) * std::exp(-rho_K * dt * static_cast<double>(m));
    return w;
  };
  if (n_ord == 2) {
    const Eigen::Index n = K.factors.front()[0].size();
    MatR A = MatR::Zero(n, n);
    for (const auto& f : K.factors) A += f[0] * f[1].transpose();
    A = A.cwiseAbs();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) A(i, j) *= std::exp(-rho_K * dt * static_cast<double>(i + j));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) c.L_K += trap_weight(i, n) * trap_weight(j, n) * A(i, j);
    }
    c.L_K *= dt * dt;
    c.d_K = A.maxCoeff();
    // Shifted diagonals K(s, s + d) exp(-rho (2s + d)), d = j - i.
    for (Eigen::Index d = -(n - 1); d <= n - 1; ++d) {
      const Eigen::Index i0 = d >= 0 ? 0 : -d;
      const Eigen::Index len = n - std::abs(d);
      double acc = 0.0;
      for (Eigen::Index s = 0; s < len; ++s) acc += trap_weight(s, len) * A(i0 + s, i0 + s + d);
      if (len >= 2) c.ell_K = std::max(c.ell_K, acc * dt);
    }
    return c;
  }
  c.exact = K.rank() == 1;
  for (const auto& f : K.factors) {
    double L = 1.0, d = 1.0;
    for (const VecR& a : f) {
      const VecR w = weighted(a);
      double s = 0.0;
      for (Eigen::Index m = 0; m < w.size(); ++m) s += trap_weight(m, w.size()) * w(m);
      L *= s * dt;
      d *= w.maxCoeff();
    }
    c.L_K += L;
    c.d_K += d;
  }
  return c;
}

WeightedSignal apply_multilinear(const SeparableKernel& K, const LowRankMultilinear& q,
                                 const std::vector<const WeightedSignal*>& args, Eigen::Index n_e,
                                 std::optional<double> cutoff, Eigen::Index max_rank, Exec exec) {
  if (K.rank() > max_rank) throw KernelRankTooHigh("separable kernel rank exceeds the configured budget");
  if (K.order() != q.order || static_cast<int>(args.size()) != q.order) {
    throw InvalidArgument("kernel order, form order and argument count differ");
  }
  const WeightedSignal& first = *args.front();
  for (const auto* a : args) require_compatible(first, *a);
  if (std::abs(K.dt - first.grid.dt) > 1e-12 * first.grid.dt) throw InvalidArgument("kernel spacing differs");
  const Eigen::Index n = first.n();
  MatC acc = MatC::Zero(n, n_e);
  for (const auto& f : K.factors) {
    for (size_t s = 0; s < q.W.size(); ++s) {
      MatC prod = MatC::Ones(n, q.W[s].cols());
      for (int i = 0; i < q.order; ++i) {
        const auto ii = static_cast<size_t>(i);
        const MatC proj = args[ii]->values.leftCols(n_e) * q.L[s][ii].transpose().cast<cplx>();
        SampledKernel a;
        a.dt = K.dt;
        a.values = f[ii].head(std::min<Eigen::Index>(n, f[ii].size())).cast<cplx>();
        const WeightedSignal conv = causal_convolve(a, WeightedSignal(first.grid, first.rho, proj, kNoWrapCheck), exec);
        prod.array() *= conv.values.array();
      }
      acc += prod * q.W[s].transpose().cast<cplx>();
    }
  }
  if (cutoff) {
    for (Eigen::Index k = 0; k < n; ++k) {
      if (first.grid.t(k) > *cutoff) acc.row(k).setZero();
    }
  }
  WeightedSignal out(first.grid, first.rho, first.dim(), first.wrap_tol);
  out.values.leftCols(n_e) = acc;
  return out;
}

WeightedSignal apply_P_multi(const SeparableKernel& K, const LowRankMultilinear& q, const WeightedSignal& u,
                             Eigen::Index n_e, std::optional<double> cutoff, Eigen::Index max_rank, Exec exec) {
  std::vector<const WeightedSignal*> args(static_cast<size_t>(q.order), &u);
  return apply_multilinear(K, q, args, n_e, cutoff, max_rank, exec);
}

double cutoff_lipschitz_constant(const KernelConstants& c, double C_q, double T, double rho, int order) {
  return std::sqrt(T) * std::exp(static_cast<double>(order - 1) * rho * T) * C_q * std::sqrt(c.d_K * c.L_K);
}

double picard_bound(const SpectralOperator& S, const KernelSpec& k, const SaturableQ& q) {
  return q.lipschitz() * (std::abs(k.kappa_at_0plus) + k.L_kappa) / S.line_c_min();
}

double rho_for_bound(const LinearProblem& p, const KernelSpec& k, const SaturableQ& q, double target, double rho_lo,
                     double rho_hi, SolverOptions opt) {
  opt.estimate_condition = false;
  auto bound_at = [&](double rho) {
    SpectralOperator S(p.bundle, p.material, rho, p.rhs.grid, opt);
    return picard_bound(S, k, q);
  };
  if (bound_at(rho_hi) > target) throw NotAContraction(rho_hi, bound_at(rho_hi), std::numeric_limits<double>::infinity());
  if (bound_at(rho_lo) <= target) return rho_lo;
  for (int it = 0; it < 100; ++it) {
    const double mid = std::sqrt(rho_lo * rho_hi);
    (bound_at(mid) > target ? rho_lo : rho_hi) = mid;
    if (rho_hi / rho_lo < 1.0 + 1e-10) break;
  }
  return rho_hi;
}

std::pair<WeightedSignal, ContractionCertificate> picard_solve(const LinearProblem& p, const KernelSpec& k,
                                                               const SaturableQ& q, PicardOptions opt) {
  opt.solver.cache_factors = true;
  const SpectralOperator S(p.bundle, p.material, p.rho, p.rhs.grid, opt.solver);
  ContractionCertificate cert;
  cert.rho = p.rho;
  cert.c_min = S.line_c_min();
  cert.q_lip = q.lipschitz();
  cert.kappa_at_0plus = k.kappa_at_0plus;
  cert.L_kappa = k.L_kappa;
  cert.theoretical_bound = cert.q_lip * (std::abs(k.kappa_at_0plus) + k.L_kappa) / cert.c_min;
  if (!(cert.theoretical_bound < 1.0)) {
    double suggestion = std::numeric_limits<double>::infinity();
    try {
      suggestion = rho_for_bound(p, k, q, 0.5, std::max(p.rho, 1e-3), 1e4, opt.solver);
    } catch (const NotAContraction&) {
    }
    throw NotAContraction(p.rho, cert.theoretical_bound, suggestion);
  }
  const Eigen::Index n_e = p.bundle->n_e();
  const WeightedSignal g = reweighted(p.rhs, p.rho);
  const ScalarMap qm = q.map();
  WeightedSignal u = S.apply(g);
  for (int it = 1; it <= opt.max_iter; ++it) {
    const WeightedSignal next = S.apply(g - apply_dt_P_nl(k, qm, u, n_e, opt.solver.exec));
    const double gap = weighted_norm(next - u);
    const double scale = std::max(weighted_norm(next), 1e-300);
    cert.gaps.push_back(gap);
    cert.iterations = it;
    u = next;
    if (gap <= opt.tol * scale || gap == 0.0) {
      cert.converged = true;
      break;
    }
  }
  for (size_t i = 1; i < cert.gaps.size(); ++i) {
    if (cert.gaps[i - 1] > 0.0) cert.empirical_ratio = std::max(cert.empirical_ratio, cert.gaps[i] / cert.gaps[i - 1]);
  }
  const WeightedSignal fixed = S.apply(g - apply_dt_P_nl(k, qm, u, n_e, opt.solver.exec));
  cert.final_residual = weighted_norm(fixed - u);
  if (!cert.converged) {
    throw MaxIterExceeded("Picard iteration did not reach the tolerance; last gap " +
                          format_sci(cert.gaps.empty() ? 0.0 : cert.gaps.back()));
  }
  return {u, cert};
}

double picard_rho_independence(const LinearProblem& p, const KernelSpec& k, const SaturableQ& q, double rho1,
                               double rho2, PicardOptions opt) {
  const double lo = std::min(rho1, rho2);
  auto solve_on = [&](double rho) {
    const auto n = static_cast<Eigen::Index>(std::llround(static_cast<double>(p.rhs.n()) * lo / rho));
    TimeGrid g = p.rhs.grid;
    g.n = n;
    LinearProblem sub = p;
    sub.rho = rho;
    sub.rhs = WeightedSignal(g, rho, MatC(p.rhs.values.topRows(n)), p.rhs.wrap_tol);
    return picard_solve(sub, k, q, opt).first;
  };
  const WeightedSignal u1 = solve_on(rho1);
  const WeightedSignal u2 = solve_on(rho2);
  const Eigen::Index n = std::min(u1.n(), u2.n());
  const double base = u1.values.topRows(n).norm();
  if (base == 0.0) return u2.values.topRows(n).norm();
  return (u1.values.topRows(n) - u2.values.topRows(n)).norm() / base;
}

std::pair<WeightedSignal, BallCertificate> ball_solve(const SpectralOperator& S, const WeightedSignal& g,
                                                      const NonlinearMap& N, double K, double C, BallOptions opt) {
  if (!(K > 0.0) || !(C >= 0.0) || !(opt.alpha > 0.0)) throw InvalidArgument("ball_solve needs K > 0, C >= 0, alpha > 0");
  BallCertificate cert;
  cert.weight = S.rho();
  cert.K = K;
  cert.C = C;
  cert.alpha = opt.alpha;
  cert.eps0 = C > 0.0 ? 1.0 / (4.0 * K * C) : std::numeric_limits<double>::infinity();
  cert.c0 = 1.0 / (4.0 * K);
  cert.radius = opt.radius > 0.0 ? opt.radius : 0.5 * std::pow(1.0 / (2.0 * K * C), 1.0 / opt.alpha);
  cert.contraction_factor = K * C * std::pow(2.0 * cert.radius, opt.alpha);
  cert.data_norm = weighted_norm(g);
  WeightedSignal u = S.apply(g);
  double nu = weighted_norm(u);
  cert.norms.push_back(nu);
  if (nu > cert.radius) throw BallEscape(0, nu, cert.radius);
  for (int it = 1; it <= opt.max_iter; ++it) {
    const WeightedSignal next = S.apply(g - N(u));
    nu = weighted_norm(next);
    cert.norms.push_back(nu);
    if (!(nu <= cert.radius)) throw BallEscape(it, nu, cert.radius);
    const double gap = weighted_norm(next - u);
    cert.gaps.push_back(gap);
    cert.iterations = it;
    u = next;
    if (gap <= opt.tol * std::max(nu, 1e-300) || gap == 0.0) {
      cert.converged = true;
      break;
    }
  }
  if (!cert.converged) throw MaxIterExceeded("ball iteration did not reach the tolerance");
  return {u, cert};
}

}  // namespace evolab
