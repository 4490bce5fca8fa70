#include <doctest.h>

#include "evolab/oracle_stepper.hpp"
#include "helpers.hpp"

using namespace evolab;

namespace {

double field_energy(const VecR& eps_e, const VecR& mu_f, const StepperState& s) {
  return (eps_e.array() * s.E.array().abs2()).sum() + (mu_f.array() * s.H.array().abs2()).sum();
}

StepperState random_state(const OracleStepper& os, const OperatorBundle& b) {
  StepperState s = os.zero_state(0.0);
  s.E = testing::random_vector(b.n_e(), 1).cast<cplx>();
  s.H = (b.C0 * testing::random_vector(b.n_e(), 2)).cast<cplx>();
  return s;
}

}  // namespace

TEST_CASE("implicit midpoint conserves energy for a lossless memoryless law") {
  const auto b = testing::box(4);
  PiecewiseMaterial m;
  m.law1 = ScalarLaw::instantaneous(1.0);
  m.law2 = ScalarLaw::instantaneous(3.0);
  m.mu2 = 2.0;
  const OracleStepper os(b, m, 0.05);
  const VecR eps_e = edge_symbol(*b, m, 1.0).real();
  const VecR mu_f = face_mu(*b, m);
  StepperState s = random_state(os, *b);
  const double e0 = field_energy(eps_e, mu_f, s);
  const VecC zero = VecC::Zero(b->dim());
  for (int k = 0; k < 400; ++k) os.step(s, zero, zero);
  CHECK(field_energy(eps_e, mu_f, s) == doctest::Approx(e0).epsilon(1e-11));
  CHECK(s.step == 400);
  CHECK(s.t == doctest::Approx(20.0));
}

TEST_CASE("conductivity dissipates energy monotonically") {
  const auto b = testing::box(4);
  PiecewiseMaterial m;
  m.law1 = conductivity_law(ScalarLaw::instantaneous(1.0), 0.5);
  m.law2 = conductivity_law(ScalarLaw::instantaneous(2.0), 0.5);
  const OracleStepper os(b, m, 0.05);
  const VecR eps_e = edge_symbol(*b, m, 1.0).real() - VecR::Constant(b->n_e(), 0.5);
  const VecR mu_f = face_mu(*b, m);
  StepperState s = random_state(os, *b);
  const VecC zero = VecC::Zero(b->dim());
  double prev = field_energy(eps_e, mu_f, s);
  for (int k = 0; k < 100; ++k) {
    os.step(s, zero, zero);
    const double e = field_energy(eps_e, mu_f, s);
    CHECK(e < prev);
    prev = e;
  }
}

TEST_CASE("recursive accumulators track the direct memory convolution") {
  const auto b = testing::box(4);
  const TimeGrid g{0.0, 0.01, 600};
  const OracleStepper os(b, testing::two_dl(), g.dt);
  WeightedSignal src = testing::pulse(g, 0.0, testing::random_vector(b->dim(), 3), 0.0, 2.0);
  src.wrap_tol = kNoWrapCheck;
  const WeightedSignal traj = os.run(os.zero_state(0.0), src, 50);
  CHECK(traj.n() == g.n);
  CHECK(traj.values.row(0).norm() == 0.0);
  CHECK(os.last_accumulator_error() < 1e-10);
}

TEST_CASE("history state of a recorded run continues the same trajectory") {
  const auto b = testing::box(4);
  const double dt = 0.01;
  const OracleStepper os(b, testing::two_dl(), dt);
  const TimeGrid g{0.0, dt, 801};
  WeightedSignal src = testing::pulse(g, 0.0, testing::random_vector(b->dim(), 4), 0.0, 2.0);
  src.wrap_tol = kNoWrapCheck;
  const WeightedSignal full = os.run(os.zero_state(0.0), src);
  // Record up to t = 5, after the source has switched off, then restart.
  const Eigen::Index cut = 500;
  const WeightedSignal past(TimeGrid{0.0, dt, cut + 1}, 0.0, MatC(full.values.topRows(cut + 1)), kNoWrapCheck);
  const TimeGrid rest{g.t(cut), dt, g.n - cut};
  const WeightedSignal cont = os.run(os.state_from_history(past), WeightedSignal(rest, 0.0, b->dim(), kNoWrapCheck));
  const MatC ref = full.values.bottomRows(rest.n);
  CHECK((cont.values - ref).norm() <= 1e-3 * ref.norm());
}

TEST_CASE("oracle converges at second order") {
  const auto b = testing::box(4);
  const PiecewiseMaterial m = testing::two_dl();
  VecR profile = VecR::Zero(b->dim());
  profile.head(b->n_e()) = testing::random_vector(b->n_e(), 1);
  const double rho = 40.0;
  std::vector<double> gaps;
  for (int level = 0; level < 3; ++level) {
    const double dt = 4e-3 / (1 << level);
    const TimeGrid g{0.0, dt, static_cast<Eigen::Index>(256) << level};
    const WeightedSignal src = testing::pulse(g, rho, profile, 0.0, 0.4);
    const WeightedSignal u = solve_linear({b, m, rho, src});
    const OracleStepper os(b, m, dt);
    WeightedSignal v = os.run(os.zero_state(0.0), src);
    v.rho = rho;
    gaps.push_back(weighted_norm(u - v) / weighted_norm(v));
  }
  CHECK(gaps.back() < 1e-3);
  CHECK(gaps[0] / gaps[1] == doctest::Approx(4.0).epsilon(0.1));
  CHECK(gaps[1] / gaps[2] == doctest::Approx(4.0).epsilon(0.1));
}
