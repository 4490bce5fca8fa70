#include <doctest.h>

#include <random>

#include "evolab/stability.hpp"
#include "helpers.hpp"

using namespace evolab;

namespace {

/// Positive definite Hermitian part plus an arbitrary skew part.
MatC random_accretive(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  MatC X(n, n), Y(n, n);
  for (Eigen::Index i = 0; i < n * n; ++i) {
    X.data()[i] = cplx(nd(rng), nd(rng));
    Y.data()[i] = cplx(nd(rng), nd(rng));
  }
  const MatC H = X * X.adjoint() / static_cast<double>(n) + 1e-3 * MatC::Identity(n, n);
  return H + (Y - Y.adjoint());
}

OperatorBundle cube() {
  YeeGrid g;
  g.extents = {2.0, 2.0, 2.0};
  return build_curl_pair(g);
}

}  // namespace

TEST_CASE("Schur complements inherit the accretivity constant") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> size(2, 9);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = size(rng);
    const Eigen::Index k = std::uniform_int_distribution<Eigen::Index>(1, n - 1)(rng);
    const SchurMargins s = schur_accretivity_check(random_accretive(n, rng), k);
    CHECK(s.herm_min > 0.0);
    CHECK(s.margin11 >= s.herm_min - 1e-10);
    CHECK(s.margin_schur >= s.herm_min - 1e-10);
  }
}

TEST_CASE("decay fit recovers an exact exponential") {
  VecR t = VecR::LinSpaced(200, 0.0, 20.0);
  VecR e = (-0.3 * t).array().exp() * 5.0;
  const DecayFit f = fit_decay(t, e, 2.0, 18.0);
  CHECK(f.nu_hat == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(std::log(5.0)).epsilon(1e-12));
  CHECK(f.r2 == doctest::Approx(1.0));
  CHECK_THROWS_AS(fit_decay(t, e, 30.0, 40.0), InvalidArgument);
}

TEST_CASE("reduced curl and projection checks on the box") {
  const OperatorBundle b = cube();
  const ProjectionBasis p = helmholtz_projections(b);
  PiecewiseMaterial m;
  const double sigma = reduced_curl_sigma(b, p, m);
  CHECK(sigma == doctest::Approx(poincare_constant(b, p).sigma_min).epsilon(1e-8));
  CHECK(sigma == doctest::Approx(2.16478).epsilon(1e-5));
  m.mu1 = m.mu2 = 4.0;
  CHECK(reduced_curl_sigma(b, p, m) == doctest::Approx(0.5 * sigma).epsilon(1e-8));
  const double lam = projection_invertibility_check(b, p, VecR::Ones(b.n_h()));
  CHECK(lam == doctest::Approx(sigma * sigma).epsilon(1e-8));
  CHECK_THROWS_AS(projection_invertibility_check(b, p, VecR::Zero(b.n_h())), InvalidArgument);
}

TEST_CASE("block law bounds are valid for each region") {
  const MdSystem md = build_Md(default_battery()[1].material, 2.16478, 0.2);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> re(-0.1, 3.0), im(-30.0, 30.0);
  for (int i = 0; i < 300; ++i) {
    const cplx z(re(rng), im(rng));
    if (std::abs(z) < 0.5) continue;
    const double lower = md.accretivity_bound(z);
    const double upper = md.norm_bound(z);
    for (int r = 0; r < 2; ++r) {
      const MatC T = z * md.eval(z, r);
      CHECK(hermitian_min_eig(T) >= lower - 1e-10);
      CHECK(T.operatorNorm() <= upper * (1.0 + 1e-10));
    }
  }
}

TEST_CASE("plain Drude-Lorentz is refused a decay certificate") {
  const DecayCertificate c = certify_decay(default_battery()[0].material, 2.16478);
  CHECK_FALSE(c.certified);
  CHECK(c.route == DecayRoute::None);
  CHECK_FALSE(c.reason.empty());
  const auto b = std::make_shared<OperatorBundle>(cube());
  const ProjectionBasis p = helmholtz_projections(*b);
  const DivergenceFreeData data = make_divergence_free_data(*b, p, TimeGrid{0.0, 0.1, 64}, -0.1, 1);
  CHECK_THROWS_AS(simulate_decay(b, default_battery()[0].material, c, data, {0.1}), NotCertified);
}

TEST_CASE("divergence-free data lies in the required ranges") {
  const OperatorBundle b = cube();
  const ProjectionBasis p = helmholtz_projections(b);
  const DivergenceFreeData d = make_divergence_free_data(b, p, TimeGrid{0.0, 0.1, 128}, -0.05, 4, 1.0, 2.0);
  CHECK(d.div_Phi < 1e-12);
  CHECK(d.pi0_Phi < 1e-12);
  CHECK(d.pi1_Psi < 1e-12);
  CHECK(d.Phi.values.topRows(10).norm() == 0.0);
  CHECK(d.Psi.values.norm() > 0.0);
}

TEST_CASE("projected quadratic source respects its Lipschitz constant") {
  const OperatorBundle b = cube();
  const ProjectionBasis p = helmholtz_projections(b);
  const TimeGrid g{0.0, 0.1, 64};
  const NonlinearMap N = projected_quadratic_source(p, b.n_e(), 0.7);
  const WeightedSignal like(g, -0.05, b.dim(), kNoWrapCheck);
  const double C = projected_quadratic_constant(0.7, g, 0.05);
  for (double scale : {1e-3, 1.0, 1e3}) CHECK(empirical_local_lipschitz(N, like, 20, scale, 1.0, 9) <= C);
}

TEST_CASE("default battery covers the three law families") {
  const auto bat = default_battery();
  REQUIRE(bat.size() == 3);
  CHECK(bat[0].material.law1.model == LawModel::DL);
  CHECK(bat[1].material.law1.model == LawModel::ModDL);
  CHECK(bat[2].material.law1.model == LawModel::DLSigma);
  CHECK(to_string(DecayRoute::Md) != to_string(DecayRoute::Conductivity));
}
