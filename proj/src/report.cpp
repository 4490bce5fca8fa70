#include "evolab/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "evolab/config.hpp"

namespace evolab {

using nlohmann::json;

namespace {

/// JSON has no infinities; they are written as strings.
json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

json vec(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + p.string());
  out << bytes;
}

}  // namespace

std::string format_exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json to_json(const SolveReport& r) {
  return {{"rho", number(r.rho)},
          {"c_min", number(r.c_min)},
          {"norm_ratio", number(r.norm_ratio)},
          {"picard_bound", number(r.c_min > 0.0 ? 1.0 / r.c_min : INFINITY)},
          {"max_condition", number(r.max_condition)},
          {"max_residual", number(r.max_residual)},
          {"wrap_residual", number(r.wrap_residual)}};
}

json to_json(const AccretivityScan& s) {
  return {{"condition_id", to_string(s.condition)},
          {"nu", number(s.nu)},
          {"delta", number(s.delta)},
          {"c_min", number(s.c_min)},
          {"c_certified", number(s.c_certified)},
          {"tail_limit", number(s.tail_limit)},
          {"argmin_re", number(s.argmin.real())},
          {"argmin_im", number(s.argmin.imag())},
          {"points", s.points},
          {"excluded_pole_cells", s.excluded_pole_cells},
          {"grid_too_coarse", s.grid_too_coarse},
          {"grid",
           {{"nu_lo", number(s.grid.nu_lo)},
            {"nu_hi", number(s.grid.nu_hi)},
            {"n_nu", s.grid.n_nu},
            {"t_min", number(s.grid.t_min)},
            {"t_max", number(s.grid.t_max)},
            {"n_t", s.grid.n_t},
            {"negative_t", s.grid.negative_t}}}};
}

json to_json(const ContractionCertificate& c) {
  return {{"rho", number(c.rho)},
          {"c_min", number(c.c_min)},
          {"q_lip", number(c.q_lip)},
          {"kappa_at_0plus", number(c.kappa_at_0plus)},
          {"L_kappa", number(c.L_kappa)},
          {"theoretical_bound", number(c.theoretical_bound)},
          {"empirical_ratio", number(c.empirical_ratio)},
          {"iterations", c.iterations},
          {"converged", c.converged},
          {"final_residual", number(c.final_residual)},
          {"gaps", vec(c.gaps)}};
}

json to_json(const BallCertificate& c) {
  return {{"weight", number(c.weight)},
          {"K", number(c.K)},
          {"C", number(c.C)},
          {"alpha", number(c.alpha)},
          {"radius", number(c.radius)},
          {"eps0", number(c.eps0)},
          {"c0", number(c.c0)},
          {"data_norm", number(c.data_norm)},
          {"contraction_factor", number(c.contraction_factor)},
          {"iterations", c.iterations},
          {"converged", c.converged},
          {"norms", vec(c.norms)},
          {"gaps", vec(c.gaps)}};
}

json to_json(const DecayCertificate& c) {
  return {{"certified", c.certified},
          {"route", to_string(c.route)},
          {"nu0", number(c.nu0)},
          {"d", number(c.d)},
          {"delta", number(c.delta)},
          {"c_min", number(c.c_min)},
          {"disk_norm", number(c.disk_norm)},
          {"sigma_C", number(c.sigma_C)},
          {"reason", c.reason}};
}

json to_json(const DecayFit& f) {
  return {{"t_lo", number(f.t_lo)},      {"t_hi", number(f.t_hi)}, {"nu_hat", number(f.nu_hat)},
          {"intercept", number(f.intercept)}, {"r2", number(f.r2)},     {"dominance", number(f.dominance)}};
}

json to_json(const CapabilityRow& r) {
  return {{"name", r.name},           {"wp0", r.wp0},          {"es0", r.es0},
          {"c_min", number(r.c_min)}, {"norm_ratio", number(r.norm_ratio)}, {"nu0", number(r.nu0)},
          {"nu_hat", number(r.nu_hat)}, {"r2", number(r.r2)},  {"note", r.note}};
}

json to_json(const EstimateRow& r) {
  return {{"name", r.name}, {"lhs", number(r.lhs)}, {"rhs", number(r.rhs)}, {"ratio", number(r.ratio)}};
}

ReportWriter::ReportWriter(std::filesystem::path dir, std::string command, std::string config_json)
    : dir_(std::move(dir)), command_(std::move(command)), config_json_(std::move(config_json)) {
  std::filesystem::create_directories(dir_);
  write_text("config.json", config_json_ + "\n");
}

void ReportWriter::record(const std::string& name, const std::string& bytes) { files_[name] = fnv1a_hex(bytes); }

void ReportWriter::write_json(const std::string& name, const json& j) { write_text(name, j.dump(2) + "\n"); }

void ReportWriter::write_csv(const std::string& name, const std::vector<std::string>& columns,
                             const std::vector<std::string>& descriptions,
                             const std::vector<std::vector<double>>& rows) {
  if (columns.size() != descriptions.size()) throw InvalidArgument("every CSV column needs a description");
  std::ostringstream os;
  for (std::size_t i = 0; i < columns.size(); ++i) os << "# " << columns[i] << ": " << descriptions[i] << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << "\n";
  for (const auto& row : rows) {
    if (row.size() != columns.size()) throw InvalidArgument("CSV row width differs from the header");
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_exact(row[i]);
    os << "\n";
  }
  write_text(name, os.str());
}

void ReportWriter::write_text(const std::string& name, const std::string& text) {
  write_bytes(dir_ / name, text);
  record(name, text);
}

void ReportWriter::write_signal(const std::string& name, const WeightedSignal& u) {
  write_container(dir_ / name, u);
  record(name, read_bytes(dir_ / name));
}

void ReportWriter::constant(const std::string& key, double value) { constants_[key] = number(value); }

void ReportWriter::constant(const std::string& key, const std::string& value) { constants_[key] = value; }

std::string ReportWriter::finish() {
  json files = json::object();
  for (const auto& [name, hash] : files_) files[name] = hash;
  const json manifest = {{"tool", "evolab"},
                         {"version", kVersion},
                         {"schema_version", kSchemaVersion},
                         {"command", command_},
                         {"config_hash", fnv1a_hex(config_json_)},
                         {"constants", constants_},
                         {"files", files}};
  const std::string bytes = manifest.dump(2) + "\n";
  write_bytes(dir_ / "manifest.json", bytes);
  return fnv1a_hex(bytes);
}

}  // namespace evolab
