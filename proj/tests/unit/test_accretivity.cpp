#include <doctest.h>

#include <random>

#include "evolab/accretivity.hpp"

using namespace evolab;

namespace {

MatC random_matrix(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  MatC T(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) T(i, j) = cplx(nd(rng), nd(rng));
  }
  return T;
}

}  // namespace

TEST_CASE("memoryless law: the M2 minimum sits on the lowest line") {
  const ScalarLaw law = ScalarLaw::instantaneous(2.0);
  ScanGrid g = ScanGrid::for_law(law, -0.25, 1.0, 6);
  const AccretivityScan s = scan_law(law, ConditionId::M2, 0.25, 0.0, g);
  CHECK(s.c_min == doctest::Approx(-0.5));
  CHECK(s.argmin.real() == doctest::Approx(-0.25));
  CHECK(s.tail_limit == doctest::Approx(-0.5));
}

TEST_CASE("plain Drude-Lorentz is accretive on the axis but not strictly") {
  const ScalarLaw law = ScalarLaw::drude_lorentz({1.0, {{1.0, 1.0, 2.0}}});
  const AccretivityScan s = scan_law(law, ConditionId::M2, 0.0, 0.0, ScanGrid::for_law(law, 0.0, 1.0, 5));
  CHECK(s.c_min >= 0.0);
  CHECK(s.c_certified == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("modified law keeps a positive M2 margin on the closed right half-plane") {
  const ScalarLaw law = ScalarLaw::modified({{1.0, {{1.0, 1.0, 2.0}}}, 3.0, 0.0});
  const AccretivityScan s = scan_law(law, ConditionId::M2, 0.0, 0.0, ScanGrid::for_law(law, 0.0, 2.0, 9));
  CHECK(s.c_certified >= 0.0);
  CHECK(s.tail_limit == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("reported minimum is attained and refinement never raises it") {
  const ScalarLaw law = ScalarLaw::drude_lorentz({1.0, {{1.0, 0.5, 2.0}}});
  const ScanFunctional f = law_functional(law, ConditionId::M3);
  const ScanGrid g = ScanGrid::for_law(law, -0.1, 1.0, 5);
  const AccretivityScan coarse = accretivity_scan(f, law.poles(), 0.0, g, ConditionId::M3);
  const AccretivityScan fine = accretivity_scan(f, law.poles(), 0.0, g.refined(), ConditionId::M3);
  CHECK(f(coarse.argmin) == coarse.c_min);
  CHECK(fine.c_min <= coarse.c_min);
  CHECK(fine.points > coarse.points);
}

TEST_CASE("points near poles are excluded and counted") {
  const ScalarLaw law = ScalarLaw::drude_lorentz({1.0, {{1.0, 0.5, 2.0}}});
  const cplx p = law.poles().front();
  const AccretivityScan s =
      scan_points(law_functional(law, ConditionId::M2), {p, p + cplx(1e-9, 0.0), cplx(1.0, 1.0)}, ConditionId::M2);
  CHECK(s.points == 2);
  CHECK(s.excluded_pole_cells == 1);
}

TEST_CASE("serial and OpenMP scans agree bitwise") {
  const ScalarLaw law = ScalarLaw::modified({{1.0, {{1.0, 1.0, 2.0}}}, 3.0, 0.0});
  const ScanGrid g = ScanGrid::for_law(law, -0.1, 3.0, 7);
  const AccretivityScan a = scan_law(law, ConditionId::M2, 0.1, 0.5, g, Exec::Serial);
  const AccretivityScan b = scan_law(law, ConditionId::M2, 0.1, 0.5, g, Exec::Parallel);
  CHECK(a.c_min == b.c_min);
  CHECK(a.argmin == b.argmin);
  CHECK(a.points == b.points);
}

TEST_CASE("Hermitian minimum eigenvalue of a 2x2 block") {
  MatC B(2, 2);
  B << cplx(2.0, 5.0), cplx(1.0, 1.0), cplx(1.0, 1.0), cplx(4.0, -3.0);
  // Hermitian part [[2, 1], [1, 4]] has eigenvalues 3 -+ sqrt(2).
  CHECK(hermitian_min_eig(B) == doctest::Approx(3.0 - std::sqrt(2.0)));
}

TEST_CASE("Schur complement equals the block formula") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const MatC T = random_matrix(7, rng);
    const Eigen::Index k = 3;
    const MatC expected = T.topLeftCorner(k, k) - T.topRightCorner(k, 4) *
                                                     T.bottomRightCorner(4, 4).fullPivLu().solve(T.bottomLeftCorner(4, k));
    CHECK((schur_complement(T, k) - expected).norm() <= 1e-10 * expected.norm());
  }
}

TEST_CASE("singular trailing block raises BlockSingular") {
  MatC T = MatC::Identity(4, 4);
  T.bottomRightCorner(2, 2).setZero();
  CHECK_THROWS_AS(schur_complement(T, 2), BlockSingular);
}

TEST_CASE("effective law evaluates the pointwise Schur complement") {
  const MatrixLaw law = [](cplx z) {
    MatC m(3, 3);
    m << z + 1.0, 0.5, 0.1, 0.2, 2.0 * z, 0.3, 0.4, 0.1, z * z + 3.0;
    return m;
  };
  const MatrixLaw eff = schur_effective_law(law, 1);
  const cplx z(0.4, 1.3);
  CHECK((eff(z) - schur_complement(law(z), 1)).norm() < 1e-14);
}
