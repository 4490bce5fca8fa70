#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "evolab/accretivity.hpp"
#include "evolab/nonlinear.hpp"
#include "evolab/spectral_solver.hpp"

using namespace evolab;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) == 0 ? Exec::Serial : Exec::Parallel; }

void label(benchmark::State& state) { state.SetLabel(state.range(0) == 0 ? "serial" : "openmp"); }

PiecewiseMaterial two_dl() {
  PiecewiseMaterial m;
  m.law1 = ScalarLaw::drude_lorentz({1.0, {{1.0, 0.5, 2.0}}});
  m.law2 = ScalarLaw::drude_lorentz({2.0, {{0.5, 0.3, 3.0}}});
  return m;
}

WeightedSignal random_signal(const TimeGrid& g, double rho, Eigen::Index dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  WeightedSignal u(g, rho, dim, kNoWrapCheck);
  for (Eigen::Index k = 0; k < g.n; ++k) {
    const double w = std::exp(-0.1 * k);
    for (Eigen::Index j = 0; j < dim; ++j) u.values(k, j) = w * cplx(nd(rng), nd(rng));
  }
  return u;
}

void BM_SpectralSolve(benchmark::State& state) {
  auto b = std::make_shared<OperatorBundle>(build_curl_pair(YeeGrid{}));
  const TimeGrid g{0.0, 0.05, 256};
  SolverOptions o;
  o.exec = exec_of(state);
  o.wrap_tol = kNoWrapCheck;
  o.estimate_condition = false;
  const SpectralOperator S(b, two_dl(), 1.0, g, o);
  const WeightedSignal rhs = random_signal(g, 1.0, b->dim(), 1);
  for (auto _ : state) benchmark::DoNotOptimize(S.apply(rhs));
  label(state);
}
BENCHMARK(BM_SpectralSolve)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_AccretivityScan(benchmark::State& state) {
  const ScalarLaw law = ScalarLaw::modified({{1.0, {{1.0, 1.0, 2.0}}}, 3.0, 0.0});
  ScanGrid g = ScanGrid::for_law(law, -0.1, 4.0, 33);
  g.n_t = 2000;
  for (auto _ : state) benchmark::DoNotOptimize(scan_law(law, ConditionId::M2, 0.1, 0.0, g, exec_of(state)));
  label(state);
}
BENCHMARK(BM_AccretivityScan)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_CausalConvolve(benchmark::State& state) {
  const TimeGrid g{0.0, 0.01, 2048};
  const SampledKernel k = dl_time_kernel({1.0, {{1.0, 0.5, 2.0}}}, g);
  const WeightedSignal u = random_signal(g, 0.5, 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(causal_convolve(k, u, exec_of(state)));
  label(state);
}
BENCHMARK(BM_CausalConvolve)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_FourierLaplace(benchmark::State& state) {
  const TimeGrid g{0.0, 0.01, 4096};
  const WeightedSignal u = random_signal(g, 0.5, 348, 3);
  for (auto _ : state) benchmark::DoNotOptimize(fourier_laplace(u, exec_of(state)));
  label(state);
}
BENCHMARK(BM_FourierLaplace)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_DtMemoryNonlinearity(benchmark::State& state) {
  const TimeGrid g{0.0, 0.01, 1024};
  const KernelSpec k = KernelSpec::exponential(0.5, 1.0, g);
  const SaturableQ q{2, 1.0};
  const WeightedSignal u = random_signal(g, 0.5, 108, 4);
  for (auto _ : state) benchmark::DoNotOptimize(apply_dt_P_nl(k, q.map(), u, 108, exec_of(state)));
  label(state);
}
BENCHMARK(BM_DtMemoryNonlinearity)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
