#include "evolab/weighted_signal.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>

#include "evolab/fft.hpp"

namespace evolab {

void TimeGrid::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("TimeGrid: dt must be positive");
  if (n < 2) throw InvalidArgument("TimeGrid: need at least two samples");
}

WeightedSignal::WeightedSignal(const TimeGrid& g, double rho_, Eigen::Index dim, double tol)
    : grid(g), rho(rho_), values(MatC::Zero(g.n, dim)), wrap_tol(tol) {
  grid.validate();
}

WeightedSignal::WeightedSignal(const TimeGrid& g, double rho_, MatC v, double tol)
    : grid(g), rho(rho_), values(std::move(v)), wrap_tol(tol) {
  grid.validate();
  if (values.rows() != grid.n) throw InvalidArgument("WeightedSignal: row count differs from grid size");
}

void require_compatible(const WeightedSignal& a, const WeightedSignal& b) {
  if (a.rho != b.rho) throw WeightMismatch("signals carry different weights");
  if (!(a.grid == b.grid) || a.dim() != b.dim()) throw InvalidArgument("signals live on different grids");
}

WeightedSignal operator+(const WeightedSignal& a, const WeightedSignal& b) {
  require_compatible(a, b);
  return WeightedSignal(a.grid, a.rho, a.values + b.values, std::max(a.wrap_tol, b.wrap_tol));
}

WeightedSignal operator-(const WeightedSignal& a, const WeightedSignal& b) {
  require_compatible(a, b);
  return WeightedSignal(a.grid, a.rho, a.values - b.values, std::max(a.wrap_tol, b.wrap_tol));
}

WeightedSignal operator*(cplx s, const WeightedSignal& a) {
  return WeightedSignal(a.grid, a.rho, s * a.values, a.wrap_tol);
}

WeightedSignal reweighted(const WeightedSignal& u, double rho) {
  return WeightedSignal(u.grid, rho, u.values, u.wrap_tol);
}

VecR dual_frequencies(const TimeGrid& g) {
  const Eigen::Index n = g.n;
  VecR xi(n);
  const double dxi = 2.0 * M_PI / g.period();
  for (Eigen::Index m = 0; m < n; ++m) {
    const Eigen::Index s = (m < (n + 1) / 2) ? m : m - n;
    xi(m) = dxi * static_cast<double>(s);
  }
  return xi;
}

namespace {

VecR weights_exp(const TimeGrid& g, double rho) {
  VecR w(g.n);
  for (Eigen::Index k = 0; k < g.n; ++k) w(k) = std::exp(-rho * g.t(k));
  return w;
}

}  // namespace

double weighted_norm(const WeightedSignal& u) {
  if (u.n() == 0 || u.dim() == 0) return 0.0;
  return weighted_norm(u, u.grid.t_start, u.grid.t_end());
}

double weighted_norm(const WeightedSignal& u, double t_lo, double t_hi) {
  if (u.n() == 0 || u.dim() == 0) return 0.0;
  const double eps = 1e-9 * u.grid.dt;
  double acc = 0.0;
  Eigen::Index first = -1, last = -1;
  for (Eigen::Index k = 0; k < u.n(); ++k) {
    const double t = u.grid.t(k);
    if (t < t_lo - eps || t > t_hi + eps) continue;
    if (first < 0) first = k;
    last = k;
  }
  if (first < 0 || first == last) return 0.0;
  for (Eigen::Index k = first; k <= last; ++k) {
    const double wk = (k == first || k == last) ? 0.5 : 1.0;
    acc += wk * u.values.row(k).squaredNorm() * std::exp(-2.0 * u.rho * u.grid.t(k));
  }
  return std::sqrt(acc * u.grid.dt);
}

VecR sample_norms(const WeightedSignal& u) {
  VecR out(u.n());
  for (Eigen::Index k = 0; k < u.n(); ++k) out(k) = u.values.row(k).norm();
  return out;
}

double wraparound_residual(const WeightedSignal& u) {
  if (u.n() == 0) return 0.0;
  double peak = 0.0;
  double ends = 0.0;
  for (Eigen::Index k = 0; k < u.n(); ++k) {
    const double m = u.values.row(k).norm() * std::exp(-u.rho * u.grid.t(k));
    peak = std::max(peak, m);
    if (k == 0 || k == u.n() - 1) ends = std::max(ends, m);
  }
  return peak > 0.0 ? ends / peak : 0.0;
}

SpectralSignal fourier_laplace(const WeightedSignal& u, Exec exec) {
  u.grid.validate();
  const double wrap = wraparound_residual(u);
  if (wrap > u.wrap_tol) {
    throw WraparoundExceeded("weighted signal has not decayed at the window ends (residual " +
                             format_sci(wrap) + ")");
  }
  SpectralSignal out;
  out.rho = u.rho;
  out.grid = u.grid;
  out.xi = dual_frequencies(u.grid);
  out.values = u.values;
  const VecR w = weights_exp(u.grid, u.rho);
  out.values.array().colwise() *= w.cast<cplx>().array();
  dft_columns(out.values, -1, exec);
  const double scale = u.grid.dt / std::sqrt(2.0 * M_PI);
  for (Eigen::Index m = 0; m < out.values.rows(); ++m) {
    const cplx phase = std::polar(scale, -out.xi(m) * u.grid.t_start);
    out.values.row(m) *= phase;
  }
  return out;
}

WeightedSignal inverse_fourier_laplace(const SpectralSignal& U, double wrap_tol, Exec exec) {
  U.grid.validate();
  MatC v = U.values;
  const double scale = std::sqrt(2.0 * M_PI) / U.grid.period();
  for (Eigen::Index m = 0; m < v.rows(); ++m) {
    v.row(m) *= std::polar(scale, U.xi(m) * U.grid.t_start);
  }
  dft_columns(v, +1, exec);
  for (Eigen::Index k = 0; k < v.rows(); ++k) v.row(k) *= std::exp(U.rho * U.grid.t(k));
  return WeightedSignal(U.grid, U.rho, std::move(v), wrap_tol);
}

double spectral_norm(const SpectralSignal& U) {
  return std::sqrt(U.values.squaredNorm() * U.dxi());
}

WeightedSignal antiderivative(const WeightedSignal& u) {
  if (!(u.rho > 0.0)) throw NonPositiveWeight("causal antiderivative needs rho > 0");
  WeightedSignal out(u.grid, u.rho, u.dim(), u.wrap_tol);
  const double dt = u.grid.dt;
  Eigen::RowVectorXcd acc = Eigen::RowVectorXcd::Zero(u.dim());
  for (Eigen::Index k = 0; k < u.n(); ++k) {
    // acc holds dt * sum_{i<k} u_i
    out.values.row(k) = acc + 0.5 * dt * u.values.row(k);
    acc += dt * u.values.row(k);
  }
  return out;
}

WeightedSignal truncate_after(const WeightedSignal& u, double a) {
  WeightedSignal out = u;
  for (Eigen::Index k = 0; k < u.n(); ++k) {
    if (u.grid.t(k) <= a) out.values.row(k).setZero();
  }
  return out;
}

double SampledKernel::weighted_l1(double rho) const {
  double acc = 0.0;
  for (Eigen::Index m = 0; m < values.size(); ++m) {
    acc += std::abs(values(m)) * std::exp(-rho * dt * static_cast<double>(m));
  }
  return acc * dt;
}

namespace {

void convolve_column(const VecC& kern, double dt, const cplx* in, cplx* out, Eigen::Index n) {
  const Eigen::Index klen = kern.size();
  for (Eigen::Index j = 0; j < n; ++j) {
    cplx acc = 0.5 * kern(0) * in[j];
    const Eigen::Index lo = std::max<Eigen::Index>(0, j - klen + 1);
    for (Eigen::Index i = lo; i < j; ++i) acc += kern(j - i) * in[i];
    out[j] = dt * acc;
  }
}

}  // namespace

WeightedSignal causal_convolve(const SampledKernel& kernel, const WeightedSignal& u, Exec exec,
                               double negative_tol) {
  if (std::abs(kernel.dt - u.grid.dt) > 1e-12 * u.grid.dt) {
    throw InvalidArgument("kernel and signal sample spacings differ");
  }
  if (kernel.values.size() == 0) return WeightedSignal(u.grid, u.rho, u.dim(), u.wrap_tol);
  const double pos_mass = kernel.values.cwiseAbs().sum();
  const double neg_mass = kernel.negative_lags.size() ? kernel.negative_lags.cwiseAbs().sum() : 0.0;
  if (neg_mass > negative_tol * std::max(pos_mass, 1e-300)) {
    throw NonCausalKernel("kernel carries mass at negative lags");
  }
  WeightedSignal out(u.grid, u.rho, u.dim(), u.wrap_tol);
  const Eigen::Index n = u.n();
  const Eigen::Index cols = u.dim();
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (Eigen::Index c = 0; c < cols; ++c) {
      convolve_column(kernel.values, kernel.dt, u.values.col(c).data(), out.values.col(c).data(), n);
    }
  } else {
    for (Eigen::Index c = 0; c < cols; ++c) {
      convolve_column(kernel.values, kernel.dt, u.values.col(c).data(), out.values.col(c).data(), n);
    }
  }
  return out;
}

namespace {

template <class T>
void put_le(std::ostream& os, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  unsigned char b[sizeof(T)];
  is.read(reinterpret_cast<char*>(b), sizeof(T));
  if (!is) throw InvalidArgument("container truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace

void write_container(const std::filesystem::path& path, const WeightedSignal& u) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("cannot open " + path.string());
  put_le<double>(os, u.grid.dt);
  put_le<double>(os, u.grid.t_start);
  put_le<std::uint64_t>(os, static_cast<std::uint64_t>(u.n()));
  put_le<double>(os, u.rho);
  put_le<std::uint64_t>(os, static_cast<std::uint64_t>(u.dim()));
  for (Eigen::Index c = 0; c < u.dim(); ++c) {
    for (Eigen::Index k = 0; k < u.n(); ++k) {
      put_le<float>(os, static_cast<float>(u.values(k, c).real()));
      put_le<float>(os, static_cast<float>(u.values(k, c).imag()));
    }
  }
}

WeightedSignal read_container(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("cannot open " + path.string());
  TimeGrid g;
  g.dt = get_le<double>(is);
  g.t_start = get_le<double>(is);
  g.n = static_cast<Eigen::Index>(get_le<std::uint64_t>(is));
  const double rho = get_le<double>(is);
  const auto dim = static_cast<Eigen::Index>(get_le<std::uint64_t>(is));
  MatC v(g.n, dim);
  for (Eigen::Index c = 0; c < dim; ++c) {
    for (Eigen::Index k = 0; k < g.n; ++k) {
      const float re = get_le<float>(is);
      const float im = get_le<float>(is);
      v(k, c) = cplx(re, im);
    }
  }
  return WeightedSignal(g, rho, std::move(v), kNoWrapCheck);
}

void write_csv(const std::filesystem::path& path, const WeightedSignal& u, Eigen::Index max_cols) {
  std::ofstream os(path);
  if (!os) throw InvalidArgument("cannot open " + path.string());
  const Eigen::Index cols = std::min(max_cols, u.dim());
  os << "# columns: t, then re_j,im_j of state component j; rho=" << u.rho << "\n";
  os << "t";
  for (Eigen::Index c = 0; c < cols; ++c) os << ",re_" << c << ",im_" << c;
  os << "\n" << std::setprecision(17);
  for (Eigen::Index k = 0; k < u.n(); ++k) {
    os << u.grid.t(k);
    for (Eigen::Index c = 0; c < cols; ++c) os << ',' << u.values(k, c).real() << ',' << u.values(k, c).imag();
    os << "\n";
  }
}

}  // namespace evolab
