#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace evolab {

using cplx = std::complex<double>;
using VecC = Eigen::VectorXcd;
using VecR = Eigen::VectorXd;
using MatC = Eigen::MatrixXcd;
using MatR = Eigen::MatrixXd;

/// Selects between the serial reference loop and the OpenMP kernel.
/// Both paths must produce bitwise identical results.
enum class Exec { Serial, Parallel };

/// Compact scientific formatting for diagnostics.
inline std::string format_sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

/// Base class of every domain error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define EVOLAB_ERROR(Name)                \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  };

EVOLAB_ERROR(WraparoundExceeded)
EVOLAB_ERROR(NonPositiveWeight)
EVOLAB_ERROR(NonCausalKernel)
EVOLAB_ERROR(WeightMismatch)
EVOLAB_ERROR(PoleHit)
EVOLAB_ERROR(OverdampedUnsupported)
EVOLAB_ERROR(BlockSingular)
EVOLAB_ERROR(KernelRankTooHigh)
EVOLAB_ERROR(LinearSolveFailure)
EVOLAB_ERROR(MaxIterExceeded)
EVOLAB_ERROR(NotCertified)
EVOLAB_ERROR(ConfigError)
EVOLAB_ERROR(InvalidArgument)

#undef EVOLAB_ERROR

/// A per-frequency matrix was too ill-conditioned to solve.
class FrequencySingular : public Error {
 public:
  FrequencySingular(cplx z, double cond);
  cplx z;
  double cond;
};

/// The Lipschitz bound of the fixed-point map is not below one.
class NotAContraction : public Error {
 public:
  NotAContraction(double rho, double bound, double rho_suggestion);
  double rho;
  double bound;
  double rho_suggestion;
};

/// An iterate left the admissible ball.
class BallEscape : public Error {
 public:
  BallEscape(int iteration, double norm, double radius);
  int iteration;
  double norm;
  double radius;
};

}  // namespace evolab
