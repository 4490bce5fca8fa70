#include <CLI11.hpp>
#include <cmath>
#include <iostream>
#include <memory>
#include <sstream>

#include "evolab/config.hpp"
#include "evolab/oracle_stepper.hpp"
#include "evolab/report.hpp"

using namespace evolab;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRefused = 3;
constexpr int kExitStrict = 4;

struct Args {
  std::string config;
  std::string out = "out";
  std::string in;
  std::string battery = "default";
  std::string ball_radius;
  std::vector<double> rho;
  std::vector<double> nu;
  bool strict = false;
};

std::shared_ptr<OperatorBundle> bundle_of(const RunConfig& c) {
  return std::make_shared<OperatorBundle>(build_curl_pair(c.grid));
}

SolverOptions solver_options(const RunConfig& c) {
  SolverOptions o;
  o.wrap_tol = c.tolerances.wrap_tol;
  o.cond_limit = c.tolerances.cond_limit;
  o.residual_tol = c.tolerances.residual_tol;
  return o;
}

double first_rho(const Args& a, const RunConfig& c) { return a.rho.empty() ? c.rho.front() : a.rho.front(); }

ConditionId condition_of(const std::string& s) {
  if (s == "M3") return ConditionId::M3;
  if (s == "M4") return ConditionId::M4;
  if (s == "PicardStrip") return ConditionId::PicardStrip;
  return ConditionId::M2;
}

std::vector<std::vector<double>> energy_rows(const WeightedSignal& u) {
  const VecR e = sample_norms(u);
  std::vector<std::vector<double>> rows;
  for (Eigen::Index k = 0; k < u.n(); ++k) rows.push_back({u.grid.t(k), e(k), e(k) * std::exp(-u.rho * u.grid.t(k))});
  return rows;
}

const std::vector<std::string> kEnergyColumns{"t", "norm", "weighted_norm"};
const std::vector<std::string> kEnergyDescriptions{"time", "spatial L2 norm of (E, H) at t",
                                                   "norm times exp(-rho t)"};

int run_scan(const Args& a, const RunConfig& c) {
  ReportWriter w(a.out, "scan", config_to_json(c));
  const ConditionId id = condition_of(c.scan.condition);
  json scans = json::array();
  bool ok = true;
  std::vector<std::vector<double>> landscape;
  int region = 1;
  for (const ScalarLaw* law : {&c.material.law1, &c.material.law2}) {
    ScanGrid g = ScanGrid::for_law(*law, -c.scan.nu, c.scan.nu_hi, c.scan.n_nu);
    g.n_t = c.scan.n_t;
    if (c.scan.t_max > 0.0) g.t_max = c.scan.t_max;
    const AccretivityScan s = scan_law(*law, id, c.scan.nu, c.scan.delta, g);
    json j = to_json(s);
    j["region"] = region;
    scans.push_back(j);
    ok = ok && s.c_certified > 0.0;
    w.constant("c_min_region" + std::to_string(region), s.c_certified);
    const ScanFunctional f = law_functional(*law, id);
    for (double x : g.nu_values()) {
      for (double t : g.t_values()) {
        for (double y : {t, -t}) {
          const cplx z(x, y);
          if (std::abs(z) <= c.scan.delta) continue;
          double v = NAN;
          try {
            v = f(z);
          } catch (const PoleHit&) {
          }
          landscape.push_back({static_cast<double>(region), x, y, v});
        }
      }
    }
    ++region;
  }
  w.write_json("scan.json", scans);
  w.write_csv("landscape.csv", {"region", "re_z", "im_z", "value"},
              {"material region", "real part of z", "imaginary part of z", "condition functional at z (nan at a pole)"},
              landscape);
  w.finish();
  std::cout << scans.dump(2) << "\n";
  return ok || !a.strict ? kExitOk : kExitStrict;
}

int run_solve(const Args& a, const RunConfig& c) {
  const double rho = first_rho(a, c);
  auto b = bundle_of(c);
  ReportWriter w(a.out, "solve", config_to_json(c));
  const WeightedSignal g = build_source(c, *b, rho);
  SolveReport rep;
  const WeightedSignal u = solve_linear(LinearProblem{b, c.material, rho, g}, &rep, solver_options(c));
  w.write_signal("solution.bin", u);
  w.write_json("solve_report.json", to_json(rep));
  w.write_csv("energy.csv", kEnergyColumns, kEnergyDescriptions, energy_rows(u));
  w.constant("rho", rho);
  w.constant("c_min", rep.c_min);
  w.constant("norm_ratio", rep.norm_ratio);
  w.finish();
  std::cout << to_json(rep).dump(2) << "\n";
  const bool ok = rep.c_min > 0.0 && rep.norm_ratio <= 1.02 / rep.c_min;
  return ok || !a.strict ? kExitOk : kExitStrict;
}

int run_picard(const Args& a, const RunConfig& c) {
  const double rho = first_rho(a, c);
  auto b = bundle_of(c);
  const TimeGrid grid = c.time.grid();
  const MemoryNonlinearity nl = build_nonlinearity(c, grid);
  const LinearProblem p{b, c.material, rho, build_source(c, *b, rho)};
  ReportWriter w(a.out, "picard", config_to_json(c));
  PicardOptions po;
  po.tol = c.tolerances.picard_tol;
  po.max_iter = c.tolerances.max_iter;
  po.solver = solver_options(c);
  json out;
  bool ok = true;
  if (a.ball_radius.empty()) {
    auto [u, cert] = picard_solve(p, nl.kernel, nl.q, po);
    out = to_json(cert);
    ok = cert.converged && cert.empirical_ratio <= cert.theoretical_bound * 1.05;
    w.write_signal("solution.bin", u);
    w.constant("theoretical_bound", cert.theoretical_bound);
    w.constant("empirical_ratio", cert.empirical_ratio);
    w.constant("L_kappa", cert.L_kappa);
    w.constant("kappa_at_0plus", cert.kappa_at_0plus);
    w.constant("q_lip", cert.q_lip);
    w.constant("c_min", cert.c_min);
  } else {
    // Confinement run: the ball of the given radius, or ||S g|| / (1 - bound) for auto.
    SpectralOperator S(b, c.material, rho, grid, po.solver);
    const double bound = picard_bound(S, nl.kernel, nl.q);
    const double K = 1.0 / S.line_c_min();
    const double L = nl.q.lipschitz() * (std::abs(nl.kernel.kappa_at_0plus) + nl.kernel.L_kappa);
    BallOptions bo;
    bo.tol = c.tolerances.picard_tol;
    bo.max_iter = c.tolerances.max_iter;
    if (a.ball_radius == "auto") {
      if (!(bound < 1.0)) throw NotAContraction(rho, bound, NAN);
      bo.radius = weighted_norm(S.apply(p.rhs)) / (1.0 - bound);
    } else {
      bo.radius = std::stod(a.ball_radius);
    }
    const NonlinearMap N = [&](const WeightedSignal& u) {
      const WeightedSignal e = field_block(u, 0, b->n_e());
      WeightedSignal out(u.grid, u.rho, u.dim(), u.wrap_tol);
      out.values.leftCols(b->n_e()) = apply_dt_P_nl(nl.kernel, nl.q.map(), e, b->n_e()).values;
      return out;
    };
    auto [u, cert] = ball_solve(S, p.rhs, N, K, L, bo);
    out = to_json(cert);
    out["contraction_bound"] = bound;
    w.write_signal("solution.bin", u);
    w.constant("radius", cert.radius);
    w.constant("K", K);
    w.constant("lipschitz", L);
    w.constant("contraction_bound", bound);
    ok = cert.converged;
  }
  w.write_json("certificate.json", out);
  w.finish();
  std::cout << out.dump(2) << "\n";
  return ok || !a.strict ? kExitOk : kExitStrict;
}

int run_history(const Args& a, const RunConfig& c) {
  if (a.in.empty()) throw ConfigError("history needs --in <file>");
  auto b = bundle_of(c);
  const WeightedSignal hist = read_container(a.in);
  const HistorySpec h = HistorySpec::from_samples(hist, c.history.use_gamma);
  const double dt = hist.grid.dt;
  const double rho = first_rho(a, c);
  const auto n_pre = static_cast<Eigen::Index>(std::llround(c.history.pre_window / dt));
  const TimeGrid grid{-static_cast<double>(n_pre) * dt, dt, c.time.n};
  const BumpSpec bump = BumpSpec::polynomial(c.history.bump_support, dt, c.history.use_gamma);
  std::unique_ptr<MemoryNonlinearity> nl;
  if (c.nonlinearity.enabled) nl = std::make_unique<MemoryNonlinearity>(build_nonlinearity(c, grid));
  ReportWriter w(a.out, "history", config_to_json(c));
  const MaxwellInhomogeneity inh = build_maxwell_inhomogeneity(h, bump, *b, c.material, grid, rho, nl.get());
  w.write_signal("Phi.bin", inh.Phi);
  w.write_signal("Psi.bin", inh.Psi);
  const double compat = check_compatibility(h, *b, c.material, nl.get());
  const double T_h = -hist.grid.t_start;
  json rep = {{"compatibility_residual", compat},
              {"div_mu_H0_interior", inh.div_mu_H0_interior},
              {"boundary_normal_trace", inh.boundary_normal_trace},
              {"history_window", T_h},
              {"kernel_tail_mass", kernel_tail_mass(c.material, T_h)},
              {"bump_support", bump.support}};
  if (!nl) {
    SolveReport sr;
    const WeightedSignal ut =
        SpectralOperator(b, c.material, rho, grid, solver_options(c)).apply(stack_fields(inh.Phi, inh.Psi), &sr);
    const WeightedSignal U = reconstruct_solution(ut, h, inh.phi_plus);
    w.write_signal("solution.bin", U);
    rep["solve"] = to_json(sr);
  }
  w.write_json("compatibility.json", rep);
  w.constant("compatibility_residual", compat);
  w.finish();
  std::cout << rep.dump(2) << "\n";
  return kExitOk;
}

int run_stability(const Args& a, const RunConfig& c) {
  auto b = bundle_of(c);
  const ProjectionBasis p = helmholtz_projections(*b);
  ReportWriter w(a.out, "stability", config_to_json(c));
  const double sigma_C = reduced_curl_sigma(*b, p, c.material);
  const DecayCertificate cert = certify_decay(c.material, sigma_C);
  w.write_json("certificate.json", to_json(cert));
  w.constant("sigma_C", sigma_C);
  w.constant("nu0", cert.nu0);
  w.constant("d", cert.d);
  w.constant("delta", cert.delta);
  if (!cert.certified) {
    w.finish();
    std::cerr << "stability run refused: " << cert.reason << "\n";
    return kExitRefused;
  }
  std::vector<double> nus = a.nu.empty() ? c.nu : a.nu;
  if (nus.empty()) nus = {0.5 * cert.nu0};
  const DivergenceFreeData data =
      make_divergence_free_data(*b, p, c.time.grid(), 1.0, c.source.seed, c.source.t_on, c.source.duration);
  DecayOptions opt;
  opt.floor = c.tolerances.fit_floor;
  opt.lag_durations = c.tolerances.lag_durations;
  opt.wrap_tol = c.tolerances.decay_wrap_tol;
  const auto runs = simulate_decay(b, c.material, cert, data, nus, opt);
  json fits = json::array();
  bool ok = true;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const DecayRun& r = runs[i];
    json j = to_json(r.fit);
    j["nu"] = r.nu;
    j["passes"] = r.fit.nu_hat >= 0.8 * r.nu && r.fit.r2 > 0.99;
    ok = ok && j["passes"].get<bool>();
    json est = json::array();
    for (const auto& row : verify_first_order_estimates(*b, p, c.material, r.solution, data.Phi, data.Psi)) {
      est.push_back(to_json(row));
    }
    j["estimates"] = est;
    fits.push_back(j);
    w.write_csv("energy_" + std::to_string(i) + ".csv", kEnergyColumns, kEnergyDescriptions, energy_rows(r.solution));
    w.constant("nu_hat_" + std::to_string(i), r.fit.nu_hat);
  }
  w.write_json("decay.json", fits);
  w.finish();
  std::cout << to_json(cert).dump(2) << "\n" << fits.dump(2) << "\n";
  return ok || !a.strict ? kExitOk : kExitStrict;
}

int run_matrix(const Args& a) {
  const BatteryConfig bat = load_battery(a.battery);
  const auto rows = capability_matrix(bat.cases, bat.options);
  json j = json::array();
  bool ok = true;
  for (const auto& r : rows) {
    j.push_back(to_json(r));
    ok = ok && r.wp0 && r.es0;
  }
  const std::string table = format_capability_table(rows);
  ReportWriter w(a.out, "matrix", j.dump());
  w.write_json("matrix.json", j);
  w.write_text("matrix.txt", table);
  w.finish();
  std::cout << table;
  return ok || !a.strict ? kExitOk : kExitStrict;
}

int run_oracle(const Args& a, const RunConfig& c) {
  auto b = bundle_of(c);
  const TimeGrid grid = c.time.grid();
  WeightedSignal src = build_source(c, *b, 0.0);
  src.wrap_tol = kNoWrapCheck;
  OracleStepper os(b, c.material, grid.dt);
  const WeightedSignal u = os.run(os.zero_state(grid.t_start), src);
  ReportWriter w(a.out, "oracle", config_to_json(c));
  w.write_signal("trajectory.bin", u);
  w.write_csv("energy.csv", kEnergyColumns, kEnergyDescriptions, energy_rows(u));
  const json rep = {{"steps", grid.n - 1}, {"dt", grid.dt}, {"accumulator_error", os.last_accumulator_error()}};
  w.write_json("oracle_report.json", rep);
  w.constant("accumulator_error", os.last_accumulator_error());
  w.finish();
  std::cout << rep.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evolab: weighted-space solvers and certificates for dispersive Maxwell systems"};
  app.require_subcommand(1);
  Args a;
  app.add_flag("--strict", a.strict, "nonzero exit when a certificate fails");

  auto with_config = [&](CLI::App* s) {
    s->add_option("--config", a.config, "run configuration (JSON)")->required();
    s->add_option("--out", a.out, "output directory");
  };
  CLI::App* scan = app.add_subcommand("scan", "accretivity scan of both material laws");
  with_config(scan);
  CLI::App* solve = app.add_subcommand("solve", "linear weighted solve");
  with_config(solve);
  solve->add_option("--rho", a.rho, "weight (default: first config weight)");
  CLI::App* picard = app.add_subcommand("picard", "nonlinear fixed point with a contraction certificate");
  with_config(picard);
  picard->add_option("--rho", a.rho, "weight");
  picard->add_option("--ball-radius", a.ball_radius, "auto or a radius; confines iterates to a ball");
  CLI::App* history = app.add_subcommand("history", "history to inhomogeneity conversion");
  with_config(history);
  history->add_option("--in", a.in, "history container")->required();
  history->add_option("--rho", a.rho, "weight");
  CLI::App* stability = app.add_subcommand("stability", "decay certificate and simulated decay");
  with_config(stability);
  stability->add_option("--nu", a.nu, "decay rates")->delimiter(',');
  CLI::App* matrix = app.add_subcommand("matrix", "capability matrix over a battery");
  matrix->add_option("--battery", a.battery, "default or a battery file");
  matrix->add_option("--out", a.out, "output directory");
  CLI::App* oracle = app.add_subcommand("oracle", "time-domain reference run");
  with_config(oracle);
  for (CLI::App* s : {scan, solve, picard, history, stability, matrix, oracle}) {
    s->add_flag("--strict", a.strict, "nonzero exit when a certificate fails");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (matrix->parsed()) return run_matrix(a);
    const RunConfig c = load_config(a.config);
    if (scan->parsed()) return run_scan(a, c);
    if (solve->parsed()) return run_solve(a, c);
    if (picard->parsed()) return run_picard(a, c);
    if (history->parsed()) return run_history(a, c);
    if (stability->parsed()) return run_stability(a, c);
    if (oracle->parsed()) return run_oracle(a, c);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NotCertified& e) {
    std::cerr << e.what() << "\n";
    return kExitRefused;
  } catch (const NotAContraction& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return kExitRefused;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitUsage;
}
