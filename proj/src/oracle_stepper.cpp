#include "evolab/oracle_stepper.hpp"

#include <cmath>
#include <string>

namespace evolab {

namespace {

std::vector<ExpTerm> terms_of(const ScalarLaw& law) {
  if (law.dl.terms.empty()) return {};
  return law.kernel_terms();
}

VecC solve_real(Eigen::SparseLU<SpMatR>& lu, const VecC& b) {
  const VecR re = lu.solve(VecR(b.real()));
  const VecR im = lu.solve(VecR(b.imag()));
  VecC x(b.size());
  x.real() = re;
  x.imag() = im;
  return x;
}

}  // namespace

OracleStepper::OracleStepper(std::shared_ptr<const OperatorBundle> bundle, const PiecewiseMaterial& material,
                             double dt)
    : bundle_(std::move(bundle)), material_(material), dt_(dt) {
  if (!bundle_) throw InvalidArgument("OracleStepper needs an operator bundle");
  if (!(dt > 0.0)) throw InvalidArgument("OracleStepper needs dt > 0");
  material_.validate();
  terms1_ = terms_of(material_.law1);
  terms2_ = terms_of(material_.law2);
  const OperatorBundle& b = *bundle_;
  w1_ = b.edge_w1;
  const VecR w2 = (1.0 - w1_.array()).matrix();
  eps0_e_ = w1_ * material_.law1.eps0() + w2 * material_.law2.eps0();
  sigma_e_ = w1_ * material_.law1.sigma + w2 * material_.law2.sigma;
  mu_f_ = face_mu(b, material_);
  double a1 = 0.0, a2 = 0.0;
  for (const auto& e : terms1_) a1 += e.coeff.real();
  for (const auto& e : terms2_) a2 += e.coeff.real();
  // P_{n+1} picks up (dt/2) Re(sum c) E_{n+1} from the newest trapezoid node.
  const VecR a_e = 0.5 * dt_ * (w1_ * a1 + w2 * a2);

  std::vector<Eigen::Triplet<double>> trips;
  const Eigen::Index ne = b.n_e(), nh = b.n_h();
  for (Eigen::Index i = 0; i < ne; ++i) {
    trips.emplace_back(i, i, (eps0_e_(i) + a_e(i)) / dt_ + 0.5 * sigma_e_(i));
  }
  for (Eigen::Index f = 0; f < nh; ++f) trips.emplace_back(ne + f, ne + f, mu_f_(f) / dt_);
  for (int k = 0; k < b.C0.outerSize(); ++k) {
    for (SpMatR::InnerIterator it(b.C0, k); it; ++it) {
      trips.emplace_back(ne + it.row(), it.col(), 0.5 * it.value());
      trips.emplace_back(it.col(), ne + it.row(), -0.5 * it.value());
    }
  }
  SpMatR M(ne + nh, ne + nh);
  M.setFromTriplets(trips.begin(), trips.end());
  lu_.compute(M);
  if (lu_.info() != Eigen::Success) throw LinearSolveFailure("oracle step matrix factorization failed");
}

StepperState OracleStepper::zero_state(double t0) const {
  StepperState s;
  s.E = VecC::Zero(bundle_->n_e());
  s.H = VecC::Zero(bundle_->n_h());
  s.Q1 = MatC::Zero(bundle_->n_e(), static_cast<Eigen::Index>(terms1_.size()));
  s.Q2 = MatC::Zero(bundle_->n_e(), static_cast<Eigen::Index>(terms2_.size()));
  s.t = t0;
  return s;
}

StepperState OracleStepper::state_from_history(const WeightedSignal& history) const {
  const OperatorBundle& b = *bundle_;
  if (history.dim() != b.dim()) throw InvalidArgument("history dimension differs from dim(A)");
  const Eigen::Index n = history.n();
  const double t_last = history.grid.t(n - 1);
  StepperState s = zero_state(t_last);
  s.E = history.values.row(n - 1).head(b.n_e()).transpose();
  s.H = history.values.row(n - 1).tail(b.n_h()).transpose();
  const double h = history.grid.dt;
  auto fill = [&](const std::vector<ExpTerm>& terms, MatC& Q) {
    for (size_t j = 0; j < terms.size(); ++j) {
      VecC acc = VecC::Zero(b.n_e());
      for (Eigen::Index k = 0; k < n; ++k) {
        const double w = (k == 0 || k == n - 1) ? 0.5 : 1.0;
        acc += (w * h * std::exp(terms[j].lambda * (t_last - history.grid.t(k)))) *
               history.values.row(k).head(b.n_e()).transpose();
      }
      Q.col(static_cast<Eigen::Index>(j)) = acc;
    }
  };
  fill(terms1_, s.Q1);
  fill(terms2_, s.Q2);
  return s;
}

VecC OracleStepper::polarization(const StepperState& s) const {
  VecC P1 = VecC::Zero(bundle_->n_e()), P2 = VecC::Zero(bundle_->n_e());
  for (size_t j = 0; j < terms1_.size(); ++j) {
    P1 += (terms1_[j].coeff * s.Q1.col(static_cast<Eigen::Index>(j))).real().cast<cplx>();
  }
  for (size_t j = 0; j < terms2_.size(); ++j) {
    P2 += (terms2_[j].coeff * s.Q2.col(static_cast<Eigen::Index>(j))).real().cast<cplx>();
  }
  return (w1_.cast<cplx>().array() * P1.array() + (1.0 - w1_.array()).cast<cplx>() * P2.array()).matrix();
}

void OracleStepper::step(StepperState& s, const VecC& src_now, const VecC& src_next) const {
  const OperatorBundle& b = *bundle_;
  const Eigen::Index ne = b.n_e(), nh = b.n_h();
  if (src_now.size() != b.dim() || src_next.size() != b.dim()) throw InvalidArgument("source size differs from dim(A)");
  const VecC avg = 0.5 * (src_now + src_next);
  const VecC P_now = polarization(s);

  // Accumulators without the E_{n+1} node.
  auto advance = [&](const std::vector<ExpTerm>& terms, const MatC& Q) {
    MatC out(Q.rows(), Q.cols());
    for (size_t j = 0; j < terms.size(); ++j) {
      const cplx g = std::exp(terms[j].lambda * dt_);
      out.col(static_cast<Eigen::Index>(j)) = g * Q.col(static_cast<Eigen::Index>(j)) + (0.5 * dt_ * g) * s.E;
    }
    return out;
  };
  MatC Q1p = advance(terms1_, s.Q1), Q2p = advance(terms2_, s.Q2);
  StepperState partial = s;
  partial.Q1 = Q1p;
  partial.Q2 = Q2p;
  const VecC known = polarization(partial) - P_now;

  VecC rhs(ne + nh);
  const VecC CH = b.C.cast<cplx>() * s.H;
  const VecC C0E = b.C0.cast<cplx>() * s.E;
  rhs.head(ne) = (eps0_e_.array() / dt_ - 0.5 * sigma_e_.array()).cast<cplx>() * s.E.array() -
                 known.array() / dt_ + 0.5 * CH.array() + avg.head(ne).array();
  rhs.tail(nh) = (mu_f_.array() / dt_).cast<cplx>() * s.H.array() - 0.5 * C0E.array() + avg.tail(nh).array();
  auto& lu = const_cast<Eigen::SparseLU<SpMatR>&>(lu_);
  const VecC x = solve_real(lu, rhs);
  const VecC E_next = x.head(ne);
  for (size_t j = 0; j < terms1_.size(); ++j) Q1p.col(static_cast<Eigen::Index>(j)) += (0.5 * dt_) * E_next;
  for (size_t j = 0; j < terms2_.size(); ++j) Q2p.col(static_cast<Eigen::Index>(j)) += (0.5 * dt_) * E_next;
  s.E = E_next;
  s.H = x.tail(nh);
  s.Q1 = std::move(Q1p);
  s.Q2 = std::move(Q2p);
  ++s.step;
  s.t += dt_;
}

WeightedSignal OracleStepper::run(StepperState s, const WeightedSignal& sources, int check_every) const {
  const OperatorBundle& b = *bundle_;
  if (sources.dim() != b.dim()) throw InvalidArgument("source dimension differs from dim(A)");
  if (std::abs(sources.grid.dt - dt_) > 1e-12 * dt_ || std::abs(sources.grid.t_start - s.t) > 1e-9 * dt_) {
    throw InvalidArgument("source grid does not match the stepper");
  }
  const Eigen::Index n = sources.n();
  WeightedSignal out(sources.grid, sources.rho, b.dim(), kNoWrapCheck);
  out.values.row(0).head(b.n_e()) = s.E.transpose();
  out.values.row(0).tail(b.n_h()) = s.H.transpose();
  const MatC Q1_0 = s.Q1, Q2_0 = s.Q2;
  last_check_ = 0.0;
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    step(s, sources.values.row(k).transpose(), sources.values.row(k + 1).transpose());
    out.values.row(k + 1).head(b.n_e()) = s.E.transpose();
    out.values.row(k + 1).tail(b.n_h()) = s.H.transpose();
    if (check_every > 0 && (k + 1) % check_every == 0) {
      // Direct trapezoid sum of the run samples plus the propagated initial accumulator.
      auto check = [&](const std::vector<ExpTerm>& terms, const MatC& Q0, const MatC& Q) {
        for (size_t j = 0; j < terms.size(); ++j) {
          const auto jj = static_cast<Eigen::Index>(j);
          VecC direct = std::exp(terms[j].lambda * (dt_ * static_cast<double>(k + 1))) * Q0.col(jj);
          for (Eigen::Index i = 0; i <= k + 1; ++i) {
            const double w = (i == 0 || i == k + 1) ? 0.5 : 1.0;
            direct += (w * dt_ * std::exp(terms[j].lambda * (dt_ * static_cast<double>(k + 1 - i)))) *
                      out.values.row(i).head(b.n_e()).transpose();
          }
          const double scale = std::max(direct.norm(), 1e-300);
          const double err = (direct - Q.col(jj)).norm() / scale;
          last_check_ = std::max(last_check_, direct.norm() > 0.0 ? err : (Q.col(jj)).norm());
          if (err > 1e-10 && direct.norm() > 0.0) {
            throw Error("memory accumulator drifted from the direct convolution (" + format_sci(err) + ")");
          }
        }
      };
      check(terms1_, Q1_0, s.Q1);
      check(terms2_, Q2_0, s.Q2);
    }
  }
  return out;
}

}  // namespace evolab
