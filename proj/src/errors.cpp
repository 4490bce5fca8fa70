#include <sstream>

#include "evolab/common.hpp"

namespace evolab {
namespace {

std::string describe(const char* head, std::initializer_list<std::pair<const char*, double>> kv) {
  std::ostringstream os;
  os << head;
  for (const auto& [k, v] : kv) os << ' ' << k << '=' << v;
  return os.str();
}

}  // namespace

FrequencySingular::FrequencySingular(cplx z_, double cond_)
    : Error(describe("frequency solve singular", {{"re_z", z_.real()}, {"im_z", z_.imag()}, {"cond", cond_}})),
      z(z_),
      cond(cond_) {}

NotAContraction::NotAContraction(double rho_, double bound_, double suggestion)
    : Error(describe("fixed-point map is not a contraction",
                     {{"rho", rho_}, {"bound", bound_}, {"rho_suggestion", suggestion}})),
      rho(rho_),
      bound(bound_),
      rho_suggestion(suggestion) {}

BallEscape::BallEscape(int it, double norm_, double radius_)
    : Error(describe("iterate left the ball", {{"iteration", double(it)}, {"norm", norm_}, {"radius", radius_}})),
      iteration(it),
      norm(norm_),
      radius(radius_) {}

}  // namespace evolab
