#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "evolab/discrete_operators.hpp"
#include "evolab/history.hpp"
#include "evolab/material_law.hpp"
#include "evolab/stability.hpp"

namespace evolab {

inline constexpr int kSchemaVersion = 1;

struct TimeConfig {
  double t_start = 0.0;
  double dt = 0.1;
  Eigen::Index n = 1024;

  TimeGrid grid() const { return TimeGrid{t_start, dt, n}; }
};

/// Right-hand side recipe: a sin^4 pulse on random spatial profiles.
struct SourceConfig {
  /// "pulse": random (E, H) profile; "divergence_free": (C f, C0 e) profiles.
  std::string kind = "pulse";
  double t_on = 0.0;
  double duration = 2.0;
  double amplitude = 1.0;
  std::uint64_t seed = 7;
};

struct NonlinearityConfig {
  bool enabled = false;
  double kernel_amplitude = 0.5;
  double kernel_decay = 1.0;
  int q_k = 2;
  double q_tau = 1.0;
};

struct ToleranceConfig {
  double wrap_tol = kDefaultWrapTol;
  double cond_limit = 1e14;
  double residual_tol = 1e-10;
  double picard_tol = 1e-10;
  int max_iter = 200;
  double fit_floor = 1e-4;
  double lag_durations = 2.0;
  double decay_wrap_tol = 1e-5;
};

struct ScanConfig {
  std::string condition = "M2";
  /// The strip reaches down to Re z = -nu.
  double nu = 0.0;
  double nu_hi = 1.0;
  int n_nu = 9;
  double delta = 0.0;
  int n_t = 400;
  /// <= 0 selects 1e4 * max omega0.
  double t_max = 0.0;
};

struct HistoryConfig {
  double bump_support = 1.0;
  bool use_gamma = true;
  /// Length of the solve window before t = 0.
  double pre_window = 0.5;
};

/// Every run parameter; defaults are complete so the emitted form is a full record.
struct RunConfig {
  int schema_version = kSchemaVersion;
  YeeGrid grid;
  PiecewiseMaterial material;
  TimeConfig time;
  std::vector<double> rho{1.0};
  std::vector<double> nu;
  SourceConfig source;
  NonlinearityConfig nonlinearity;
  ToleranceConfig tolerances;
  ScanConfig scan;
  HistoryConfig history;
};

/// Parses the JSON text. Throws ConfigError naming the line or key path for syntax
/// errors, unknown keys, wrong types, a missing or unsupported schema_version, and
/// parameter sets that fail validation.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
/// Canonical JSON (sorted keys, all defaults filled in).
std::string config_to_json(const RunConfig& c);

/// (Phi, Psi) on the configured grid at weight rho, scaled by source.amplitude.
WeightedSignal build_source(const RunConfig& c, const OperatorBundle& b, double rho);
/// Memory nonlinearity of the config on the given grid (kernel amplitude exp(-decay t)).
MemoryNonlinearity build_nonlinearity(const RunConfig& c, const TimeGrid& grid);

struct BatteryConfig {
  std::vector<CapabilityCase> cases;
  CapabilityOptions options;
};
/// "default" gives the built-in battery; otherwise a JSON file
/// {schema_version, cases: [{name, material}], grid, rho, dt, n, seed}.
BatteryConfig load_battery(const std::string& name_or_path);

/// 64-bit FNV-1a of the bytes, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace evolab
