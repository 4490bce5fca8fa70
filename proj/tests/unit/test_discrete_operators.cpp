#include <doctest.h>

#include <Eigen/SVD>

#include "evolab/discrete_operators.hpp"
#include "helpers.hpp"

using namespace evolab;

TEST_CASE("4^3 PEC box dimensions") {
  const OperatorBundle b = build_curl_pair(YeeGrid{});
  CHECK(b.n_e() == 108);
  CHECK(b.n_h() == 240);
  CHECK(b.grid.n_interior_nodes() == 27);
  CHECK(b.D.rows() == 64);
}

TEST_CASE("A is exactly skew and C is exactly the transpose of C0") {
  for (int cells : {4, 8}) {
    const auto b = testing::box(cells);
    const SpMatR S = b->A + SpMatR(b->A.transpose());
    CHECK(S.norm() == 0.0);
    CHECK(SpMatR(b->C - SpMatR(b->C0.transpose())).norm() == 0.0);
  }
}

TEST_CASE("discrete complex property: curl grad = 0 and div curl = 0") {
  const OperatorBundle b = build_curl_pair(YeeGrid{{1.0, 2.0, 0.5}, {3, 4, 5}, 3, 2});
  CHECK(SpMatR(b.C0 * b.G0).norm() == 0.0);
  CHECK(SpMatR(b.D * b.C0).norm() <= 1e-12 * b.D.norm() * b.C0.norm());
  CHECK(SpMatR(b.D0 + SpMatR(b.D.transpose())).norm() == 0.0);
}

TEST_CASE("integer incidence entries are -1, 0 or 1") {
  const OperatorBundle b = build_curl_pair(YeeGrid{});
  for (int k = 0; k < b.C0_int.outerSize(); ++k) {
    for (SpMatR::InnerIterator it(b.C0_int, k); it; ++it) CHECK(std::abs(it.value()) == 1.0);
  }
}

TEST_CASE("smallest nonzero singular value of C0 matches a dense SVD") {
  const OperatorBundle b = build_curl_pair(YeeGrid{});
  const ProjectionBasis p = helmholtz_projections(b);
  const PoincareReport r = poincare_constant(b, p);
  const Eigen::JacobiSVD<MatR> svd{MatR(b.C0)};
  const VecR s = svd.singularValues();
  double smallest = s(0);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > 1e-8 * s(0)) smallest = std::min(smallest, s(i));
  }
  CHECK(r.sigma_min > 0.0);
  CHECK(std::abs(r.sigma_min - smallest) <= 1e-8 * smallest);
  CHECK(r.constant == doctest::Approx(1.0 / r.sigma_min));
}

TEST_CASE("projection bases are orthonormal and complementary") {
  const OperatorBundle b = build_curl_pair(YeeGrid{});
  const ProjectionBasis p = helmholtz_projections(b);
  const Eigen::Index ne = b.n_e();
  CHECK(p.basis_ker_C0.cols() + p.basis_ran_C.cols() == ne);
  CHECK((p.basis_ker_C0.transpose() * p.basis_ker_C0 - MatR::Identity(p.basis_ker_C0.cols(), p.basis_ker_C0.cols()))
            .norm() < 1e-12);
  CHECK((p.basis_ker_C0.transpose() * p.basis_ran_C).norm() < 1e-12);
  CHECK((MatR(b.C0) * p.basis_ker_C0).norm() < 1e-10);
  CHECK((MatR(b.C) * p.basis_ker_C).norm() < 1e-10);
  CHECK_FALSE(p.rank_ambiguous);
  // Gradients of interior node fields lie in ker(C0).
  const VecR grad = b.G0 * testing::random_vector(b.G0.cols(), 3);
  CHECK((p.apply_pi0(grad) - grad).norm() < 1e-10 * grad.norm());
}

TEST_CASE("cohomology of the box: ker(C0) is exactly the gradients") {
  const OperatorBundle b = build_curl_pair(YeeGrid{});
  const CohomologyReport c = cohomology_dimensions(b, helmholtz_projections(b));
  CHECK(c.dim_ker_C0 == c.n_interior_nodes);
  CHECK(c.dim_ker_C0 + c.dim_ran_C0 == b.n_e());
  CHECK(c.dim_ker_div_edges == b.n_e() - c.n_interior_nodes);
}

TEST_CASE("interface weights split the box in half") {
  const OperatorBundle b = build_curl_pair(YeeGrid{});
  PiecewiseMaterial m;
  m.mu1 = 1.0;
  m.mu2 = 3.0;
  const VecR mu = face_mu(b, m);
  CHECK(mu.minCoeff() >= 1.0);
  CHECK(mu.maxCoeff() <= 3.0);
  CHECK(b.face_w1.minCoeff() >= 0.0);
  CHECK(b.face_w1.maxCoeff() <= 1.0);
  CHECK(b.edge_w1.sum() > 0.0);
  CHECK(b.edge_w1.sum() < static_cast<double>(b.n_e()));
}

TEST_CASE("divergence diagnostics vanish for curl fields and detect sources") {
  const OperatorBundle b = build_curl_pair(YeeGrid{});
  const TimeGrid g{0.0, 0.1, 5};
  WeightedSignal H(g, 0.0, b.n_h());
  const VecR curl = b.C0 * testing::random_vector(b.n_e(), 9);
  for (Eigen::Index k = 0; k < g.n; ++k) H.values.row(k) = (static_cast<double>(k) * curl).cast<cplx>().transpose();
  const VecR mu = VecR::Ones(b.n_h());
  CHECK(divergence_diagnostics(b, H, mu).maxCoeff() < 1e-12 * curl.norm() * 5.0);
  const VecR grad = b.D0 * testing::random_vector(b.D.rows(), 4);
  H.values.row(3) += grad.cast<cplx>().transpose();
  CHECK(divergence_diagnostics(b, H, mu)(3) > 1e-3);
}
