#include "evolab/accretivity.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace evolab {

std::string to_string(ConditionId id) {
  switch (id) {
    case ConditionId::M2: return "M2";
    case ConditionId::M3: return "M3";
    case ConditionId::M4: return "M4";
    case ConditionId::PicardStrip: return "PicardStrip";
    case ConditionId::Md: return "Md";
    case ConditionId::SolveLine: return "SolveLine";
  }
  return "M2";
}

ScanGrid ScanGrid::refined() const {
  ScanGrid g = *this;
  g.n_nu = n_nu > 1 ? 2 * n_nu - 1 : 1;
  g.n_t = n_t > 1 ? 2 * n_t - 1 : 1;
  return g;
}

std::vector<double> ScanGrid::nu_values() const {
  std::vector<double> v;
  if (n_nu <= 1) return {nu_lo};
  for (int i = 0; i < n_nu; ++i) {
    v.push_back(nu_lo + (nu_hi - nu_lo) * (static_cast<double>(i) / static_cast<double>(n_nu - 1)));
  }
  return v;
}

std::vector<double> ScanGrid::t_values() const {
  std::vector<double> pos;
  if (n_t <= 1) {
    pos.push_back(t_min);
  } else {
    const double l0 = std::log(t_min), l1 = std::log(t_max);
    for (int i = 0; i < n_t; ++i) {
      pos.push_back(std::exp(l0 + (l1 - l0) * (static_cast<double>(i) / static_cast<double>(n_t - 1))));
    }
  }
  std::vector<double> out;
  if (negative_t) {
    for (auto it = pos.rbegin(); it != pos.rend(); ++it) out.push_back(-*it);
  }
  out.push_back(0.0);
  out.insert(out.end(), pos.begin(), pos.end());
  return out;
}

ScanGrid ScanGrid::for_law(const ScalarLaw& law, double nu_lo, double nu_hi, int n_nu) {
  ScanGrid g;
  g.nu_lo = nu_lo;
  g.nu_hi = nu_hi;
  g.n_nu = n_nu;
  const double w = std::max(law.max_omega0(), 1.0);
  g.t_min = 1e-3 * w;
  g.t_max = 1e4 * w;
  g.n_t = 600;
  return g;
}

namespace {

double pole_distance(cplx z, const std::vector<cplx>& poles) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& p : poles) d = std::min(d, std::abs(z - p));
  return d;
}

}  // namespace

AccretivityScan accretivity_scan(const ScanFunctional& f, const std::vector<cplx>& poles, double delta,
                                 const ScanGrid& grid, ConditionId id, Exec exec) {
  AccretivityScan out;
  out.condition = id;
  out.delta = delta;
  out.grid = grid;
  out.nu = -grid.nu_lo;
  const auto nus = grid.nu_values();
  const auto ts = grid.t_values();
  const Eigen::Index nt = static_cast<Eigen::Index>(ts.size());
  const Eigen::Index total = static_cast<Eigen::Index>(nus.size()) * nt;
  // state: 0 = evaluated, 1 = inside excluded disk, 2 = pole-adjacent
  std::vector<double> vals(static_cast<size_t>(total), std::numeric_limits<double>::infinity());
  std::vector<int> state(static_cast<size_t>(total), 0);
  auto eval = [&](Eigen::Index idx) {
    const cplx z(nus[static_cast<size_t>(idx / nt)], ts[static_cast<size_t>(idx % nt)]);
    if (std::abs(z) <= delta) {
      state[static_cast<size_t>(idx)] = 1;
      return;
    }
    if (pole_distance(z, poles) < 1e-6) {
      state[static_cast<size_t>(idx)] = 2;
      return;
    }
    vals[static_cast<size_t>(idx)] = f(z);
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < total; ++i) eval(i);
  } else {
    for (Eigen::Index i = 0; i < total; ++i) eval(i);
  }
  Eigen::Index best = -1;
  for (Eigen::Index i = 0; i < total; ++i) {
    const auto s = static_cast<size_t>(i);
    if (state[s] == 2) ++out.excluded_pole_cells;
    if (state[s] != 0) continue;
    ++out.points;
    if (best < 0 || vals[s] < vals[static_cast<size_t>(best)]) best = i;
  }
  if (best >= 0) {
    out.c_min = vals[static_cast<size_t>(best)];
    out.argmin = cplx(nus[static_cast<size_t>(best / nt)], ts[static_cast<size_t>(best % nt)]);
    const Eigen::Index j = best % nt;
    for (Eigen::Index nb : {j - 1, j + 1}) {
      if (nb >= 0 && nb < nt && state[static_cast<size_t>(best - j + nb)] == 2) out.grid_too_coarse = true;
    }
  }
  out.c_certified = out.c_min;
  return out;
}

AccretivityScan scan_points(const ScanFunctional& f, const std::vector<cplx>& points, ConditionId id, Exec exec) {
  AccretivityScan out;
  out.condition = id;
  const Eigen::Index total = static_cast<Eigen::Index>(points.size());
  std::vector<double> vals(points.size());
  // Points on a pole are excluded rather than evaluated.
  auto eval = [&](Eigen::Index i) {
    const auto k = static_cast<size_t>(i);
    try {
      vals[k] = f(points[k]);
    } catch (const PoleHit&) {
      vals[k] = std::numeric_limits<double>::quiet_NaN();
    }
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < total; ++i) eval(i);
  } else {
    for (Eigen::Index i = 0; i < total; ++i) eval(i);
  }
  std::size_t used = 0;
  for (size_t i = 0; i < vals.size(); ++i) {
    if (std::isnan(vals[i])) {
      ++out.excluded_pole_cells;
      continue;
    }
    ++used;
    if (vals[i] < out.c_min) {
      out.c_min = vals[i];
      out.argmin = points[i];
    }
  }
  out.points = used;
  out.c_certified = out.c_min;
  if (!points.empty()) {
    double lo = points.front().real();
    for (const auto& p : points) lo = std::min(lo, p.real());
    out.nu = -lo;
  }
  return out;
}

ScanFunctional law_functional(const ScalarLaw& law, ConditionId id) {
  switch (id) {
    case ConditionId::M2: return [law](cplx z) { return (z * law.eps(z)).real(); };
    case ConditionId::M3: return [law](cplx z) { return law.eps(z).real(); };
    default: return [law](cplx z) { return law.z_times(z).real(); };
  }
}

AccretivityScan scan_law(const ScalarLaw& law, ConditionId id, double nu, double delta, const ScanGrid& grid,
                         Exec exec) {
  ScanGrid g = grid;
  g.nu_lo = -nu;
  // Every functional here is analytic at z = 0, so the conductivity pole is dropped.
  auto poles = law.poles();
  poles.erase(std::remove(poles.begin(), poles.end(), cplx(0.0)), poles.end());
  AccretivityScan s = accretivity_scan(law_functional(law, id), poles, delta, g, id, exec);
  s.nu = nu;
  // Known limits as |t| -> infinity, taken at the lowest line of the strip.
  switch (id) {
    case ConditionId::M2: s.tail_limit = law.re_zM_tail_limit(-nu) - law.sigma; break;
    case ConditionId::M3: s.tail_limit = law.eps0(); break;
    default: s.tail_limit = law.re_zM_tail_limit(-nu); break;
  }
  s.c_certified = std::min(s.c_min, s.tail_limit);
  return s;
}

double hermitian_min_eig(const MatC& B) {
  const MatC H = 0.5 * (B + B.adjoint());
  Eigen::SelfAdjointEigenSolver<MatC> es(H, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

MatC schur_complement(const MatC& T, Eigen::Index k, double cond_limit) {
  const Eigen::Index n = T.rows();
  if (k <= 0 || k >= n) throw InvalidArgument("Schur split must leave both blocks nonempty");
  const MatC T00 = T.topLeftCorner(k, k);
  const MatC T01 = T.topRightCorner(k, n - k);
  const MatC T10 = T.bottomLeftCorner(n - k, k);
  const MatC T11 = T.bottomRightCorner(n - k, n - k);
  Eigen::JacobiSVD<MatC> svd(T11);
  const auto& sv = svd.singularValues();
  const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
  if (!(cond <= cond_limit)) throw BlockSingular("Schur block e11 singular, condition " + format_sci(cond));
  return T00 - T01 * T11.partialPivLu().solve(T10);
}

MatrixLaw schur_effective_law(MatrixLaw law, Eigen::Index k, double cond_limit) {
  return [law = std::move(law), k, cond_limit](cplx z) { return schur_complement(law(z), k, cond_limit); };
}

}  // namespace evolab
