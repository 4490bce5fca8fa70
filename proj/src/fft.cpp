#include "evolab/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

namespace evolab {
namespace {

// The FFTW planner is not thread-safe; execution with new-array calls is.
std::mutex planner_mutex;

fftw_plan plan_for(int n, int sign) {
  static std::map<std::pair<int, int>, fftw_plan> plans;
  std::lock_guard<std::mutex> lock(planner_mutex);
  auto key = std::make_pair(n, sign);
  auto it = plans.find(key);
  if (it != plans.end()) return it->second;
  auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * static_cast<size_t>(n)));
  fftw_plan p = fftw_plan_dft_1d(n, buf, buf, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(buf);
  plans.emplace(key, p);
  return p;
}

}  // namespace

void dft_columns(MatC& data, int sign, Exec exec) {
  const int n = static_cast<int>(data.rows());
  const Eigen::Index cols = data.cols();
  if (n == 0 || cols == 0) return;
  fftw_plan p = plan_for(n, sign);
  auto column = [&](Eigen::Index j) {
    auto* ptr = reinterpret_cast<fftw_complex*>(data.col(j).data());
    fftw_execute_dft(p, ptr, ptr);
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (Eigen::Index j = 0; j < cols; ++j) column(j);
  } else {
    for (Eigen::Index j = 0; j < cols; ++j) column(j);
  }
}

}  // namespace evolab
