#pragma once

#include <cmath>
#include <memory>
#include <random>

#include "evolab/spectral_solver.hpp"

namespace evolab::testing {

inline PiecewiseMaterial two_dl() {
  PiecewiseMaterial m;
  m.law1 = ScalarLaw::drude_lorentz({1.0, {{1.0, 0.5, 2.0}}});
  m.law2 = ScalarLaw::drude_lorentz({2.0, {{0.5, 0.3, 3.0}}});
  return m;
}

inline std::shared_ptr<OperatorBundle> box(int cells = 4) {
  YeeGrid g;
  g.n_cells = {cells, cells, cells};
  g.interface_index = cells / 2;
  return std::make_shared<OperatorBundle>(build_curl_pair(g));
}

inline VecR random_vector(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  VecR v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = nd(rng);
  return v;
}

/// profile * sin^4(pi (t - t_on) / duration) on (t_on, t_on + duration).
inline WeightedSignal pulse(const TimeGrid& g, double rho, const VecR& profile, double t_on, double duration) {
  WeightedSignal s(g, rho, profile.size());
  for (Eigen::Index k = 0; k < g.n; ++k) {
    const double t = g.t(k) - t_on;
    if (t <= 0.0 || t >= duration) continue;
    s.values.row(k) = (std::pow(std::sin(M_PI * t / duration), 4) * profile).cast<cplx>().transpose();
  }
  return s;
}

}  // namespace evolab::testing
