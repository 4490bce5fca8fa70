#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "evolab/config.hpp"
#include "evolab/report.hpp"

using namespace evolab;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

const char* kFull = R"({
  "schema_version": 1,
  "grid": {"extents": [2, 2, 2], "cells": [4, 4, 4]},
  "material": {
    "region1": {"model": "mod_dl", "eps0": 1, "terms": [{"alpha": 1, "gamma": 1, "omega0": 2}], "r": 3},
    "mu1": 1.5
  },
  "time": {"dt": 0.05, "n": 256},
  "weights": {"rho": [1, 2], "nu": [0.05]},
  "source": {"kind": "divergence_free", "seed": 3}
})";

}  // namespace

TEST_CASE("FNV-1a reference values") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("a full config parses and second regions default to the first") {
  const RunConfig c = parse_config(kFull);
  CHECK(c.grid.extents[0] == 2.0);
  CHECK(c.material.law1.model == LawModel::ModDL);
  CHECK(c.material.law2.model == LawModel::ModDL);
  CHECK(c.material.law2.r == 3.0);
  CHECK(c.material.mu1 == 1.5);
  CHECK(c.material.mu2 == 1.0);
  CHECK(c.rho == std::vector<double>{1.0, 2.0});
  CHECK(c.source.kind == "divergence_free");
  CHECK(c.source.seed == 3);
  CHECK_FALSE(c.nonlinearity.enabled);
}

TEST_CASE("canonical form round trips") {
  const RunConfig c = parse_config(kFull);
  const std::string once = config_to_json(c);
  CHECK(config_to_json(parse_config(once)) == once);
}

TEST_CASE("config errors name their cause") {
  CHECK(error_of(R"({"grid": {}})").find("missing schema_version") != std::string::npos);
  CHECK(error_of(R"({"schema_version": 2})").find("unsupported schema_version") != std::string::npos);
  CHECK(error_of(R"({"schema_version": 1, "time": {"dtt": 0.1}})").find("unknown key time.dtt") != std::string::npos);
  CHECK(error_of("{\n\"schema_version\": 1,\n\"time\": {,}\n}").find("line 3") != std::string::npos);
  CHECK(error_of(R"({"schema_version": 1, "time": {"dt": "fast"}})").find("wrong type") != std::string::npos);
  CHECK(error_of(R"({"schema_version": 1, "time": {"dt": -1}})").find("time.dt") != std::string::npos);
  CHECK(error_of(R"({"schema_version": 1, "material": {"region1": {"model": "dl", "sigma": 1}}})")
            .find("sigma") != std::string::npos);
  CHECK(error_of(R"({"schema_version": 1, "material": {"region1": {"model": "lorentz"}}})").find("model") !=
        std::string::npos);
}

TEST_CASE("an empty config file is a config error") {
  const auto path = std::filesystem::temp_directory_path() / "evolab_empty_config.json";
  std::ofstream(path) << "  \n";
  CHECK_THROWS_AS(load_config(path), ConfigError);
  std::filesystem::remove(path);
}

TEST_CASE("source recipes honor the configured kind") {
  RunConfig c = parse_config(kFull);
  const OperatorBundle b = build_curl_pair(c.grid);
  const WeightedSignal s = build_source(c, b, 1.0);
  CHECK(s.n() == 256);
  CHECK(s.dim() == b.dim());
  const VecR e = s.values.row(20).head(b.n_e()).real();
  CHECK((b.G0.transpose() * e).norm() < 1e-10 * (1.0 + e.norm()));
  c.source.kind = "pulse";
  CHECK(build_source(c, b, 1.0).values.norm() > 0.0);
}

TEST_CASE("battery loading") {
  const BatteryConfig d = load_battery("default");
  CHECK(d.cases.size() == 3);
  CHECK(d.options.grid.extents[0] == 2.0);
  CHECK_THROWS_AS(load_battery("/nonexistent/battery.json"), ConfigError);
}

TEST_CASE("report directories are byte-identical across runs") {
  const auto root = std::filesystem::temp_directory_path() / "evolab_report_test";
  std::filesystem::remove_all(root);
  auto write = [&](const std::string& sub) {
    ReportWriter w(root / sub, "solve", config_to_json(parse_config(kFull)));
    SolveReport r;
    r.rho = 1.0;
    r.c_min = 0.25;
    r.max_condition = std::numeric_limits<double>::infinity();
    w.write_json("report.json", to_json(r));
    w.write_csv("energy.csv", {"t", "e"}, {"time", "energy"}, {{0.0, 1.0}, {0.1, 1.0 / 3.0}});
    w.constant("c_min", 0.25);
    return w.finish();
  };
  const std::string h1 = write("a");
  const std::string h2 = write("b");
  CHECK(h1 == h2);
  for (const char* f : {"config.json", "report.json", "energy.csv", "manifest.json"}) {
    CHECK(slurp(root / "a" / f) == slurp(root / "b" / f));
  }
  const std::string csv = slurp(root / "a" / "energy.csv");
  CHECK(csv.rfind("# t: time", 0) == 0);
  CHECK(csv.find("0.33333333333333331") != std::string::npos);
  CHECK(slurp(root / "a" / "report.json").find("\"inf\"") != std::string::npos);
  const auto manifest = nlohmann::json::parse(slurp(root / "a" / "manifest.json"));
  CHECK(manifest["files"]["energy.csv"] == fnv1a_hex(csv));
  CHECK(manifest["version"] == kVersion);
  std::filesystem::remove_all(root);
}

TEST_CASE("exact formatting keeps 17 significant digits") {
  CHECK(format_exact(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_exact(1.0 / 3.0)) == 1.0 / 3.0);
}
