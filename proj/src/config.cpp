#include "evolab/config.hpp"

#include <cstdio>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <random>
#include <set>
#include <sstream>

namespace evolab {

namespace {

using nlohmann::json;

/// Object view that records which keys were read and rejects the rest.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }
  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  void read(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + " has the wrong type");
    }
  }

  Section sub(const std::string& key) {
    seen_.insert(key);
    return Section(j_.at(key), where(key));
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown key " + where(it.key()));
    }
  }

  std::string where(const std::string& key = "") const {
    const std::string p = key.empty() ? path_ : (path_.empty() ? key : path_ + "." + key);
    return p.empty() ? "<root>" : p;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t stop = std::min(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1;
    for (std::size_t i = 0; i < stop; ++i) line += text[i] == '\n';
    throw ConfigError("syntax error at line " + std::to_string(line) + ": " + e.what());
  }
}

void read_schema(Section& s) {
  if (!s.has("schema_version")) throw ConfigError("missing schema_version");
  int v = 0;
  s.read("schema_version", v);
  if (v != kSchemaVersion) {
    throw ConfigError("unsupported schema_version " + std::to_string(v) + " (expected " +
                      std::to_string(kSchemaVersion) + ")");
  }
}

void read_grid(Section s, YeeGrid& g) {
  s.read("extents", g.extents);
  s.read("cells", g.n_cells);
  s.read("interface_axis", g.interface_axis);
  s.read("interface_index", g.interface_index);
  s.finish();
}

ScalarLaw read_law(Section s) {
  std::string model = "dl";
  DrudeLorentzParams dl;
  double r = 1.0, sigma = 0.0;
  s.read("model", model);
  s.read("eps0", dl.eps0);
  if (s.has("terms")) {
    const json& terms = s.raw("terms");
    if (!terms.is_array()) throw ConfigError(s.where("terms") + " must be an array");
    for (std::size_t i = 0; i < terms.size(); ++i) {
      Section t(terms[i], s.where("terms") + "[" + std::to_string(i) + "]");
      DLTerm term;
      t.read("alpha", term.alpha);
      t.read("gamma", term.gamma);
      t.read("omega0", term.omega0);
      t.finish();
      dl.terms.push_back(term);
    }
  }
  s.read("r", r);
  s.read("sigma", sigma);
  s.finish();
  LawModel m;
  try {
    m = law_model_from_string(model);
  } catch (const Error&) {
    throw ConfigError(s.where("model") + " must be one of dl, mod_dl, dl_sigma");
  }
  if (m != LawModel::DLSigma && sigma != 0.0) throw ConfigError(s.where("sigma") + " needs model dl_sigma");
  ScalarLaw law;
  try {
    switch (m) {
      case LawModel::DL: law = ScalarLaw::drude_lorentz(dl); break;
      case LawModel::ModDL: law = ScalarLaw::modified(ModDLParams{dl, r, 0.0}); break;
      case LawModel::DLSigma: law = conductivity_law(ScalarLaw::drude_lorentz(dl), sigma); break;
    }
    law.validate();
  } catch (const Error& e) {
    throw ConfigError(s.where() + ": " + e.what());
  }
  return law;
}

void read_material(Section s, PiecewiseMaterial& m) {
  if (s.has("region1")) m.law1 = read_law(s.sub("region1"));
  m.law2 = s.has("region2") ? read_law(s.sub("region2")) : m.law1;
  s.read("mu1", m.mu1);
  s.read("mu2", m.mu2);
  s.finish();
  try {
    m.validate();
  } catch (const Error& e) {
    throw ConfigError(s.where() + ": " + e.what());
  }
}

json grid_json(const YeeGrid& g) {
  return {{"extents", g.extents}, {"cells", g.n_cells}, {"interface_axis", g.interface_axis},
          {"interface_index", g.interface_index}};
}

json law_json(const ScalarLaw& law) {
  json terms = json::array();
  for (const auto& t : law.dl.terms) terms.push_back({{"alpha", t.alpha}, {"gamma", t.gamma}, {"omega0", t.omega0}});
  json j = {{"model", to_string(law.model)}, {"eps0", law.dl.eps0}, {"terms", terms}};
  if (law.model == LawModel::ModDL) j["r"] = law.r;
  if (law.model == LawModel::DLSigma) j["sigma"] = law.sigma;
  return j;
}

json material_json(const PiecewiseMaterial& m) {
  return {{"region1", law_json(m.law1)}, {"region2", law_json(m.law2)}, {"mu1", m.mu1}, {"mu2", m.mu2}};
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key + " " + what);
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  const json root = parse_json(text);
  Section s(root, "");
  RunConfig c;
  read_schema(s);
  if (s.has("grid")) read_grid(s.sub("grid"), c.grid);
  if (s.has("material")) read_material(s.sub("material"), c.material);
  if (s.has("time")) {
    Section t = s.sub("time");
    t.read("t_start", c.time.t_start);
    t.read("dt", c.time.dt);
    t.read("n", c.time.n);
    t.finish();
  }
  if (s.has("weights")) {
    Section w = s.sub("weights");
    w.read("rho", c.rho);
    w.read("nu", c.nu);
    w.finish();
  }
  if (s.has("source")) {
    Section t = s.sub("source");
    t.read("kind", c.source.kind);
    t.read("t_on", c.source.t_on);
    t.read("duration", c.source.duration);
    t.read("amplitude", c.source.amplitude);
    t.read("seed", c.source.seed);
    t.finish();
  }
  if (s.has("nonlinearity")) {
    Section t = s.sub("nonlinearity");
    c.nonlinearity.enabled = true;
    t.read("enabled", c.nonlinearity.enabled);
    t.read("kernel_amplitude", c.nonlinearity.kernel_amplitude);
    t.read("kernel_decay", c.nonlinearity.kernel_decay);
    t.read("q_k", c.nonlinearity.q_k);
    t.read("q_tau", c.nonlinearity.q_tau);
    t.finish();
  }
  if (s.has("tolerances")) {
    Section t = s.sub("tolerances");
    t.read("wrap_tol", c.tolerances.wrap_tol);
    t.read("cond_limit", c.tolerances.cond_limit);
    t.read("residual_tol", c.tolerances.residual_tol);
    t.read("picard_tol", c.tolerances.picard_tol);
    t.read("max_iter", c.tolerances.max_iter);
    t.read("fit_floor", c.tolerances.fit_floor);
    t.read("lag_durations", c.tolerances.lag_durations);
    t.read("decay_wrap_tol", c.tolerances.decay_wrap_tol);
    t.finish();
  }
  if (s.has("scan")) {
    Section t = s.sub("scan");
    t.read("condition", c.scan.condition);
    t.read("nu", c.scan.nu);
    t.read("nu_hi", c.scan.nu_hi);
    t.read("n_nu", c.scan.n_nu);
    t.read("delta", c.scan.delta);
    t.read("n_t", c.scan.n_t);
    t.read("t_max", c.scan.t_max);
    t.finish();
  }
  if (s.has("history")) {
    Section t = s.sub("history");
    t.read("bump_support", c.history.bump_support);
    t.read("use_gamma", c.history.use_gamma);
    t.read("pre_window", c.history.pre_window);
    t.finish();
  }
  s.finish();

  try {
    c.grid.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
  require(c.time.dt > 0.0, "time.dt", "must be positive");
  require(c.time.n >= 8, "time.n", "must be at least 8");
  require(!c.rho.empty(), "weights.rho", "must not be empty");
  for (double nu : c.nu) require(nu > 0.0, "weights.nu", "entries must be positive");
  require(c.source.kind == "pulse" || c.source.kind == "divergence_free", "source.kind",
          "must be pulse or divergence_free");
  require(c.source.duration > 0.0, "source.duration", "must be positive");
  require(c.tolerances.max_iter > 0, "tolerances.max_iter", "must be positive");
  require(c.scan.nu >= 0.0 && c.scan.nu_hi >= -c.scan.nu, "scan", "needs nu >= 0 and nu_hi >= -nu");
  require(c.scan.n_nu >= 1 && c.scan.n_t >= 2, "scan", "needs n_nu >= 1 and n_t >= 2");
  require(c.scan.condition == "M2" || c.scan.condition == "M3" || c.scan.condition == "M4" ||
              c.scan.condition == "PicardStrip",
          "scan.condition", "must be one of M2, M3, M4, PicardStrip");
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw ConfigError("config " + path.string() + " is empty");
  return parse_config(text);
}

std::string config_to_json(const RunConfig& c) {
  const json j = {
      {"schema_version", c.schema_version},
      {"grid", grid_json(c.grid)},
      {"material", material_json(c.material)},
      {"time", {{"t_start", c.time.t_start}, {"dt", c.time.dt}, {"n", c.time.n}}},
      {"weights", {{"rho", c.rho}, {"nu", c.nu}}},
      {"source",
       {{"kind", c.source.kind},
        {"t_on", c.source.t_on},
        {"duration", c.source.duration},
        {"amplitude", c.source.amplitude},
        {"seed", c.source.seed}}},
      {"nonlinearity",
       {{"enabled", c.nonlinearity.enabled},
        {"kernel_amplitude", c.nonlinearity.kernel_amplitude},
        {"kernel_decay", c.nonlinearity.kernel_decay},
        {"q_k", c.nonlinearity.q_k},
        {"q_tau", c.nonlinearity.q_tau}}},
      {"tolerances",
       {{"wrap_tol", c.tolerances.wrap_tol},
        {"cond_limit", c.tolerances.cond_limit},
        {"residual_tol", c.tolerances.residual_tol},
        {"picard_tol", c.tolerances.picard_tol},
        {"max_iter", c.tolerances.max_iter},
        {"fit_floor", c.tolerances.fit_floor},
        {"lag_durations", c.tolerances.lag_durations},
        {"decay_wrap_tol", c.tolerances.decay_wrap_tol}}},
      {"scan",
       {{"condition", c.scan.condition},
        {"nu", c.scan.nu},
        {"nu_hi", c.scan.nu_hi},
        {"n_nu", c.scan.n_nu},
        {"delta", c.scan.delta},
        {"n_t", c.scan.n_t},
        {"t_max", c.scan.t_max}}},
      {"history",
       {{"bump_support", c.history.bump_support},
        {"use_gamma", c.history.use_gamma},
        {"pre_window", c.history.pre_window}}},
  };
  return j.dump(2);
}

BatteryConfig load_battery(const std::string& name_or_path) {
  BatteryConfig b;
  b.options.grid.extents = {2.0, 2.0, 2.0};
  if (name_or_path == "default") {
    b.cases = default_battery();
    return b;
  }
  std::ifstream in(name_or_path);
  if (!in) throw ConfigError("cannot read battery " + name_or_path);
  std::stringstream ss;
  ss << in.rdbuf();
  const json root = parse_json(ss.str());
  Section s(root, "");
  read_schema(s);
  if (s.has("grid")) read_grid(s.sub("grid"), b.options.grid);
  s.read("rho", b.options.rho);
  s.read("dt", b.options.dt);
  s.read("n", b.options.n);
  s.read("seed", b.options.seed);
  if (!s.has("cases")) throw ConfigError("battery needs a cases array");
  const json& cases = s.raw("cases");
  if (!cases.is_array() || cases.empty()) throw ConfigError("cases must be a nonempty array");
  for (std::size_t i = 0; i < cases.size(); ++i) {
    Section cs(cases[i], "cases[" + std::to_string(i) + "]");
    CapabilityCase c;
    cs.read("name", c.name);
    if (!cs.has("material")) throw ConfigError(cs.where("material") + " is required");
    read_material(cs.sub("material"), c.material);
    cs.finish();
    b.cases.push_back(std::move(c));
  }
  s.finish();
  return b;
}

WeightedSignal build_source(const RunConfig& c, const OperatorBundle& b, double rho) {
  const TimeGrid grid = c.time.grid();
  WeightedSignal g;
  if (c.source.kind == "divergence_free") {
    const ProjectionBasis p = helmholtz_projections(b);
    const DivergenceFreeData d =
        make_divergence_free_data(b, p, grid, rho, c.source.seed, c.source.t_on, c.source.duration);
    g = stack_fields(d.Phi, d.Psi);
  } else {
    std::mt19937_64 rng(c.source.seed);
    std::normal_distribution<double> nd;
    VecR profile(b.dim());
    for (Eigen::Index i = 0; i < profile.size(); ++i) profile(i) = nd(rng);
    profile /= profile.norm();
    g = WeightedSignal(grid, rho, b.dim());
    for (Eigen::Index k = 0; k < grid.n; ++k) {
      const double t = grid.t(k) - c.source.t_on;
      if (t <= 0.0 || t >= c.source.duration) continue;
      const double env = std::pow(std::sin(M_PI * t / c.source.duration), 4);
      g.values.row(k) = (env * profile).cast<cplx>().transpose();
    }
  }
  g.values *= c.source.amplitude;
  g.wrap_tol = c.tolerances.wrap_tol;
  return g;
}

MemoryNonlinearity build_nonlinearity(const RunConfig& c, const TimeGrid& grid) {
  MemoryNonlinearity nl;
  nl.kernel = KernelSpec::exponential(c.nonlinearity.kernel_amplitude, c.nonlinearity.kernel_decay, grid);
  nl.q = SaturableQ{c.nonlinearity.q_k, c.nonlinearity.q_tau};
  nl.q.validate();
  return nl;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace evolab
