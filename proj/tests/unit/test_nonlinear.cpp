#include <doctest.h>

#include <random>

#include "evolab/nonlinear.hpp"
#include "helpers.hpp"

using namespace evolab;

namespace {

WeightedSignal random_signal(const TimeGrid& g, double rho, Eigen::Index dim, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  WeightedSignal u(g, rho, dim, kNoWrapCheck);
  for (Eigen::Index k = 1; k < g.n; ++k) {
    for (Eigen::Index j = 0; j < dim; ++j) u.values(k, j) = scale * cplx(nd(rng), nd(rng));
  }
  return u;
}

/// Trapezoid weight of sample i in a causal convolution evaluated at sample j.
double conv_weight(Eigen::Index i, Eigen::Index j) { return i == j ? 0.5 : 1.0; }

}  // namespace

TEST_CASE("saturable map is Lipschitz with the stated constant") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (int k : {2, 3, 5}) {
    for (double tau : {0.5, 1.0, 4.0}) {
      const SaturableQ q{k, tau};
      const double L = q.lipschitz();
      double worst = 0.0;
      for (int i = 0; i < 2000; ++i) {
        const double s = std::exp(3.0 * nd(rng));
        const cplx u(s * nd(rng), s * nd(rng));
        const cplx v = u + cplx(nd(rng), nd(rng)) * std::exp(2.0 * nd(rng));
        worst = std::max(worst, std::abs(q(u) - q(v)) / std::abs(u - v));
      }
      CHECK(worst <= L * (1.0 + 1e-12));
    }
  }
  CHECK_THROWS(SaturableQ{1, 1.0}.validate());
  CHECK_THROWS(SaturableQ{2, 0.0}.validate());
}

TEST_CASE("derivative mass of an exponential kernel") {
  const TimeGrid g{0.0, 1e-3, 40001};
  for (double rho : {0.0, 0.5}) {
    const KernelSpec k = KernelSpec::exponential(2.0, 1.5, g, rho);
    // int_0^40 2 * 1.5 e^{-(1.5 + rho) s} ds.
    const double expected = 3.0 / (1.5 + rho) * (1.0 - std::exp(-(1.5 + rho) * 40.0));
    CHECK(k.L_kappa == doctest::Approx(expected).epsilon(1e-6));
    CHECK(k.kappa_at_0plus == 2.0);
  }
}

TEST_CASE("time derivative of the memory term matches a spectral derivative") {
  const TimeGrid g{0.0, 0.005, 4096};
  const double rho = 0.5;
  WeightedSignal u(g, rho, 3);
  for (Eigen::Index k = 0; k < g.n; ++k) {
    const double t = g.t(k);
    const double p = (t > 0.5 && t < 3.5) ? std::pow(std::sin(M_PI * (t - 0.5) / 3.0), 4) : 0.0;
    u.values.row(k) << p, -0.5 * p, cplx(0.0, 2.0 * p);
  }
  const KernelSpec k = KernelSpec::exponential(0.8, 2.0, g);
  const SaturableQ q{2, 1.0};
  const WeightedSignal d = apply_dt_P_nl(k, q.map(), u, 2);
  const WeightedSignal ref = spectral_derivative(apply_P_nl(k, q.map(), u, 2));
  CHECK(weighted_norm(d - ref) <= 1e-4 * weighted_norm(ref));
  CHECK(d.values.col(2).norm() == 0.0);
}

TEST_CASE("kernel constants of a separable exponential") {
  const TimeGrid g{0.0, 2e-3, 4001};
  const double a = 1.5, b = 1.0, rho = 0.5;
  const KernelConstants c = kernel_constants(SeparableKernel::exponential(2, a, b, g), rho);
  CHECK(c.exact);
  CHECK(c.d_K == doctest::Approx(a));
  CHECK(c.L_K == doctest::Approx(a / ((b + rho) * (b + rho))).epsilon(1e-5));
  CHECK(c.ell_K == doctest::Approx(a / (2.0 * (b + rho))).epsilon(1e-5));
}

TEST_CASE("multilinear memory term matches a direct double sum") {
  const TimeGrid g{0.0, 0.05, 40};
  const Eigen::Index n_e = 3;
  SeparableKernel K;
  K.dt = g.dt;
  for (int p = 0; p < 2; ++p) {
    std::vector<VecR> f;
    for (int i = 0; i < 2; ++i) {
      VecR a(g.n);
      for (Eigen::Index m = 0; m < g.n; ++m) a(m) = std::cos(0.3 * (p + 1) * (i + 1) * g.t(m)) * std::exp(-g.t(m));
      f.push_back(a);
    }
    K.factors.push_back(f);
  }
  const LowRankMultilinear q = LowRankMultilinear::random(n_e, 2, 2, 2, 3);
  const WeightedSignal u = random_signal(g, 0.3, n_e + 1, 4);
  const WeightedSignal v = random_signal(g, 0.3, n_e + 1, 5);
  const WeightedSignal out = apply_multilinear(K, q, {&u, &v}, n_e);
  for (Eigen::Index j : {0, 1, 17, 39}) {
    VecC expected = VecC::Zero(n_e);
    for (const auto& f : K.factors) {
      for (Eigen::Index i1 = 0; i1 <= j; ++i1) {
        for (Eigen::Index i2 = 0; i2 <= j; ++i2) {
          const double w = conv_weight(i1, j) * conv_weight(i2, j) * g.dt * g.dt * f[0](j - i1) * f[1](j - i2);
          expected += w * q.apply({u.values.row(i1).head(n_e).transpose(), v.values.row(i2).head(n_e).transpose()});
        }
      }
    }
    CHECK((out.values.row(j).head(n_e).transpose() - expected).norm() <= 1e-12 * (1.0 + expected.norm()));
    CHECK(out.values(j, n_e) == cplx(0.0));
  }
}

TEST_CASE("cutoff memory term obeys its local Lipschitz estimate") {
  const TimeGrid g{0.0, 0.02, 200};
  const double rho = 0.5, T = 2.0;
  const Eigen::Index n_e = 4;
  const SeparableKernel K = SeparableKernel::exponential(2, 1.0, 0.7, g);
  const LowRankMultilinear q = LowRankMultilinear::random(n_e, 2, 1, 3, 8);
  const double C = cutoff_lipschitz_constant(kernel_constants(K, rho), q.bound(), T, rho, 2);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const WeightedSignal u = random_signal(g, rho, n_e, 100 + s, 0.1 * (s + 1));
    const WeightedSignal v = random_signal(g, rho, n_e, 200 + s, 0.05);
    const double lhs = weighted_norm(apply_P_multi(K, q, u, n_e, T) - apply_P_multi(K, q, v, n_e, T));
    CHECK(lhs <= C * (weighted_norm(u) + weighted_norm(v)) * weighted_norm(u - v));
  }
}

TEST_CASE("kernel rank above the budget is refused") {
  const TimeGrid g{0.0, 0.1, 10};
  SeparableKernel K = SeparableKernel::exponential(2, 1.0, 1.0, g);
  K.factors.resize(3, K.factors.front());
  const WeightedSignal u = random_signal(g, 0.0, 2, 1);
  CHECK_THROWS_AS(apply_P_multi(K, LowRankMultilinear::random(2, 2, 1, 1, 1), u, 2, std::nullopt, 2),
                  KernelRankTooHigh);
}

TEST_CASE("Picard iteration contracts at the certified rate and refuses weak weights") {
  const auto b = testing::box(4);
  const TimeGrid g{0.0, 0.02, 512};
  const KernelSpec k = KernelSpec::exponential(2.0, 1.0, g);
  const SaturableQ q{2, 1.0};
  LinearProblem p{b, testing::two_dl(), 8.0, testing::pulse(g, 8.0, testing::random_vector(b->dim(), 1), 0.0, 2.0)};
  const double rho = rho_for_bound(p, k, q, 0.5);
  p.rho = rho;
  p.rhs = reweighted(p.rhs, rho);
  const auto [u, cert] = picard_solve(p, k, q);
  CHECK(cert.converged);
  CHECK(cert.theoretical_bound == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(cert.empirical_ratio <= cert.theoretical_bound * 1.05);
  CHECK(cert.final_residual <= 1e-8 * weighted_norm(u));

  LinearProblem weak = p;
  weak.rho = 0.5;
  weak.rhs = reweighted(p.rhs, 0.5);
  try {
    picard_solve(weak, k, q);
    FAIL("expected NotAContraction");
  } catch (const NotAContraction& e) {
    CHECK(e.bound >= 1.0);
    CHECK(e.rho_suggestion == doctest::Approx(rho).epsilon(1e-6));
  }
}

TEST_CASE("ball iteration refuses data that leaves the ball") {
  const auto b = testing::box(4);
  const TimeGrid g{0.0, 0.05, 256};
  SolverOptions o;
  o.wrap_tol = kNoWrapCheck;
  o.cache_factors = true;
  const SpectralOperator S(b, testing::two_dl(), 1.0, g, o);
  const NonlinearMap zero = [](const WeightedSignal& u) { return WeightedSignal(u.grid, u.rho, u.dim(), u.wrap_tol); };
  const WeightedSignal rhs = testing::pulse(g, 1.0, testing::random_vector(b->dim(), 2), 0.0, 2.0);
  const double K = 1.0 / S.line_c_min();
  BallOptions opt;
  opt.radius = 2.0 * K * weighted_norm(rhs);
  const auto [u, cert] = ball_solve(S, rhs, zero, K, 1.0, opt);
  CHECK(cert.converged);
  CHECK(cert.iterations == 1);
  opt.radius = 1e-3 * weighted_norm(u);
  CHECK_THROWS_AS(ball_solve(S, rhs, zero, K, 1.0, opt), BallEscape);
}

TEST_CASE("serial and OpenMP memory terms agree bitwise") {
  const TimeGrid g{0.0, 0.01, 300};
  const KernelSpec k = KernelSpec::exponential(0.5, 1.0, g);
  const WeightedSignal u = random_signal(g, 0.5, 20, 6);
  const SaturableQ q{3, 2.0};
  CHECK(apply_dt_P_nl(k, q.map(), u, 15, Exec::Serial).values == apply_dt_P_nl(k, q.map(), u, 15, Exec::Parallel).values);
}
