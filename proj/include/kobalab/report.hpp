#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace kobalab {

/// One named check. `pass` is margin >= -tolerance.
struct ReportEntry {
  std::string name;
  double value = 0.0;
  double margin = 0.0;
  double tolerance = 0.0;
  bool pass = true;
};

/// Structured diagnostics record shared by every verifier.
class Report {
 public:
  explicit Report(std::string name = "report");

  const std::string& name() const { return name_; }

  ReportEntry& add(std::string entry_name, double value, double margin, double tolerance = 0.0);
  /// Boolean check recorded with margin 0 (pass) or -1 (fail).
  ReportEntry& add_check(std::string entry_name, bool ok, double value = 0.0);

  void note(const std::string& key, nlohmann::json value);
  void set_config(nlohmann::json config) { config_ = std::move(config); }
  void set_metadata(const std::string& key, nlohmann::json value) { metadata_[key] = std::move(value); }
  void add_artifact(std::string path) { artifacts_.push_back(std::move(path)); }

  /// Appends entries of `other`, prefixing their names.
  void merge(const Report& other, const std::string& prefix);

  bool pass() const;
  const std::vector<ReportEntry>& entries() const { return entries_; }
  const ReportEntry* find(const std::string& entry_name) const;
  /// Throws std::out_of_range when absent.
  const ReportEntry& at(const std::string& entry_name) const;
  double min_margin() const;
  std::size_t failures() const;

  const nlohmann::json& notes() const { return notes_; }
  const nlohmann::json& config() const { return config_; }
  const std::vector<std::string>& artifacts() const { return artifacts_; }

  nlohmann::json to_json() const;
  /// name,value,margin,tolerance,pass
  std::string entries_csv() const;

 private:
  std::string name_;
  std::vector<ReportEntry> entries_;
  nlohmann::json notes_ = nlohmann::json::object();
  nlohmann::json config_ = nlohmann::json::object();
  nlohmann::json metadata_ = nlohmann::json::object();
  std::vector<std::string> artifacts_;
};

/// Writes a CSV with a fixed header row.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace kobalab
