#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>

#include "evolab/common.hpp"

namespace evolab {

/// Uniform sample grid t_k = t_start + k*dt, k = 0..n-1.
struct TimeGrid {
  double t_start = 0.0;
  double dt = 1.0;
  Eigen::Index n = 2;

  double t(Eigen::Index k) const { return t_start + static_cast<double>(k) * dt; }
  double t_end() const { return t(n - 1); }
  /// Window length n*dt, the period of the DFT.
  double period() const { return static_cast<double>(n) * dt; }
  /// Throws InvalidArgument unless dt > 0 and n >= 2.
  void validate() const;
  bool operator==(const TimeGrid&) const = default;
};

inline constexpr double kDefaultWrapTol = 1e-8;
inline constexpr double kNoWrapCheck = std::numeric_limits<double>::infinity();

/// Sampled trajectory with an exponential weight exp(-rho t) attached.
/// Rows are time samples, columns are state components.
struct WeightedSignal {
  TimeGrid grid;
  double rho = 0.0;
  MatC values;
  /// Admissible ratio of weighted endpoint magnitude to weighted peak.
  double wrap_tol = kDefaultWrapTol;

  WeightedSignal() = default;
  WeightedSignal(const TimeGrid& g, double rho_, Eigen::Index dim, double tol = kDefaultWrapTol);
  WeightedSignal(const TimeGrid& g, double rho_, MatC v, double tol = kDefaultWrapTol);

  Eigen::Index dim() const { return values.cols(); }
  Eigen::Index n() const { return values.rows(); }
};

/// Samples of the Fourier-Laplace transform on the DFT dual grid.
/// xi(m) = 2*pi*m/(n*dt) in FFT order (negative frequencies in the upper half).
struct SpectralSignal {
  double rho = 0.0;
  TimeGrid grid;
  VecR xi;
  MatC values;

  double dxi() const { return 2.0 * M_PI / grid.period(); }
};

// Arithmetic on signals. Operands must share grid and weight; mismatched
// weights raise WeightMismatch instead of being silently reweighted.
WeightedSignal operator+(const WeightedSignal& a, const WeightedSignal& b);
WeightedSignal operator-(const WeightedSignal& a, const WeightedSignal& b);
WeightedSignal operator*(cplx s, const WeightedSignal& a);
/// Explicit change of weight label; samples are unchanged.
WeightedSignal reweighted(const WeightedSignal& u, double rho);
void require_compatible(const WeightedSignal& a, const WeightedSignal& b);

VecR dual_frequencies(const TimeGrid& g);

/// Trapezoid approximation of (int |u(t)|^2 exp(-2 rho t) dt)^{1/2}.
double weighted_norm(const WeightedSignal& u);
/// Weighted norm on the sub-window [t_lo, t_hi].
double weighted_norm(const WeightedSignal& u, double t_lo, double t_hi);
/// Unweighted Euclidean norm of each time sample.
VecR sample_norms(const WeightedSignal& u);
/// max(|w_0|, |w_{n-1}|) / max_k |w_k| with w = exp(-rho t) u; zero for a zero signal.
double wraparound_residual(const WeightedSignal& u);

/// Unitary discrete Fourier-Laplace transform. Throws WraparoundExceeded when
/// the weighted signal has not decayed to u.wrap_tol at the window ends.
SpectralSignal fourier_laplace(const WeightedSignal& u, Exec exec = Exec::Parallel);
/// Exact inverse of fourier_laplace.
WeightedSignal inverse_fourier_laplace(const SpectralSignal& U, double wrap_tol = kDefaultWrapTol,
                                       Exec exec = Exec::Parallel);
/// (sum_m |U_m|^2 dxi)^{1/2}.
double spectral_norm(const SpectralSignal& U);

/// Causal antiderivative int_{-inf}^t u with u zero-extended left of the window,
/// by the trapezoid rule. Requires rho > 0 (NonPositiveWeight otherwise).
WeightedSignal antiderivative(const WeightedSignal& u);
/// Zeroes samples with t <= a.
WeightedSignal truncate_after(const WeightedSignal& u, double a);

/// Scalar causal kernel sampled at lags 0, dt, 2dt, ...; values(0) is the
/// right limit at zero. Samples at negative lags are carried only so that
/// causal_convolve can reject kernels with mass there.
struct SampledKernel {
  double dt = 1.0;
  VecC values;
  VecC negative_lags;

  /// dt * sum |values| weighted by exp(-rho s).
  double weighted_l1(double rho) const;
};

/// Trapezoid convolution (k*u)(t_j) = dt*(sum_{i<j} k_{j-i} u_i + k_0 u_j / 2).
/// Exactly zero wherever u vanishes on and before the sample.
WeightedSignal causal_convolve(const SampledKernel& kernel, const WeightedSignal& u,
                               Exec exec = Exec::Parallel, double negative_tol = 1e-12);

/// Binary container: little-endian header {f64 dt, f64 t_start, u64 n, f64 rho,
/// u64 state_dim} followed by column-major complex64 (float32 re, im) pairs.
void write_container(const std::filesystem::path& path, const WeightedSignal& u);
WeightedSignal read_container(const std::filesystem::path& path);
/// CSV with a header row: t, then re_j, im_j per column up to max_cols columns.
void write_csv(const std::filesystem::path& path, const WeightedSignal& u, Eigen::Index max_cols = 16);

}  // namespace evolab
