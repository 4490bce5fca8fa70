#pragma once

#include <Eigen/SparseLU>
#include <memory>
#include <vector>

#include "evolab/discrete_operators.hpp"
#include "evolab/material_law.hpp"
#include "evolab/weighted_signal.hpp"

namespace evolab {

/// Fields plus one complex accumulator per edge and kernel term,
///   Q(t) = int_{-inf}^t exp(lambda (t - s)) E(s) ds,
/// so that the polarization on region r is sum_j Re(c_j Q_j).
struct StepperState {
  VecC E;
  VecC H;
  MatC Q1;  ///< n_e x (terms of law1)
  MatC Q2;  ///< n_e x (terms of law2)
  Eigen::Index step = 0;
  double t = 0.0;
};

/// Implicit midpoint for the fields, exponential trapezoid recursion for the memory.
/// Sources are averaged over each step; the sparse step matrix is factored once.
class OracleStepper {
 public:
  OracleStepper(std::shared_ptr<const OperatorBundle> bundle, const PiecewiseMaterial& material, double dt);

  StepperState zero_state(double t0) const;
  /// State at t = 0 from a history on t <= 0 (rows of (E, H), last row at t = 0).
  StepperState state_from_history(const WeightedSignal& history) const;

  /// Advances one step; src_now and src_next are (Phi, Psi) at t and t + dt.
  void step(StepperState& s, const VecC& src_now, const VecC& src_next) const;

  /// Trajectory on sources.grid starting from s (row 0 is s itself). The grid
  /// must start at s.t with the stepper's dt. Every check_every steps the
  /// accumulators are compared with the direct trapezoid convolution.
  WeightedSignal run(StepperState s, const WeightedSignal& sources, int check_every = 100) const;

  /// Largest relative accumulator deviation seen by the last run's checks.
  double last_accumulator_error() const { return last_check_; }
  double dt() const { return dt_; }

  /// Polarization on edges: sum over regions and terms of the weighted Re(c Q).
  VecC polarization(const StepperState& s) const;

 private:
  std::shared_ptr<const OperatorBundle> bundle_;
  PiecewiseMaterial material_;
  double dt_;
  std::vector<ExpTerm> terms1_, terms2_;
  VecR eps0_e_, sigma_e_, mu_f_, w1_;
  Eigen::SparseLU<SpMatR> lu_;
  mutable double last_check_ = 0.0;
};

}  // namespace evolab
