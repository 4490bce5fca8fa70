#pragma once

#include <filesystem>
#include <json.hpp>
#include <map>
#include <string>
#include <vector>

#include "evolab/accretivity.hpp"
#include "evolab/nonlinear.hpp"
#include "evolab/stability.hpp"

namespace evolab {

inline constexpr const char* kVersion = "0.1.0";

nlohmann::json to_json(const SolveReport& r);
nlohmann::json to_json(const AccretivityScan& s);
nlohmann::json to_json(const ContractionCertificate& c);
nlohmann::json to_json(const BallCertificate& c);
nlohmann::json to_json(const DecayCertificate& c);
nlohmann::json to_json(const DecayFit& f);
nlohmann::json to_json(const CapabilityRow& r);
nlohmann::json to_json(const EstimateRow& r);

/// Writes the artifacts of one run into a directory and closes them with
/// manifest.json: version, command, config hash, certified constants and the
/// FNV-1a hash of every file. Nothing time- or host-dependent is recorded, so
/// identical inputs give byte-identical directories.
class ReportWriter {
 public:
  ReportWriter(std::filesystem::path dir, std::string command, std::string config_json);

  void write_json(const std::string& name, const nlohmann::json& j);
  /// CSV with '#' comment lines documenting each column, then a header row.
  void write_csv(const std::string& name, const std::vector<std::string>& columns,
                 const std::vector<std::string>& descriptions, const std::vector<std::vector<double>>& rows);
  void write_text(const std::string& name, const std::string& text);
  void write_signal(const std::string& name, const WeightedSignal& u);

  /// Recorded in the manifest under "constants".
  void constant(const std::string& key, double value);
  void constant(const std::string& key, const std::string& value);

  /// Writes manifest.json and returns its hash.
  std::string finish();

  const std::filesystem::path& dir() const { return dir_; }

 private:
  void record(const std::string& name, const std::string& bytes);

  std::filesystem::path dir_;
  std::string command_;
  std::string config_json_;
  std::map<std::string, std::string> files_;
  nlohmann::json constants_ = nlohmann::json::object();
};

/// Decimal form with 17 significant digits, stable across runs.
std::string format_exact(double v);

}  // namespace evolab
