#include "kobalab/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace kobalab {

namespace {

// JSON has no encoding for non-finite doubles.
nlohmann::json finite_or_string(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

}  // namespace

Report::Report(std::string name) : name_(std::move(name)) {}

ReportEntry& Report::add(std::string entry_name, double value, double margin, double tolerance) {
  const bool pass = std::isfinite(margin) ? margin >= -tolerance : margin > 0;
  entries_.push_back(ReportEntry{std::move(entry_name), value, margin, tolerance, pass});
  return entries_.back();
}

ReportEntry& Report::add_check(std::string entry_name, bool ok, double value) {
  return add(std::move(entry_name), value, ok ? 0.0 : -1.0, 0.0);
}

void Report::note(const std::string& key, nlohmann::json value) { notes_[key] = std::move(value); }

void Report::merge(const Report& other, const std::string& prefix) {
  for (const ReportEntry& e : other.entries()) {
    ReportEntry copy = e;
    copy.name = prefix + e.name;
    entries_.push_back(std::move(copy));
  }
  if (!other.notes().empty()) notes_[prefix.empty() ? other.name() : prefix] = other.notes();
  for (const auto& a : other.artifacts()) artifacts_.push_back(a);
}

bool Report::pass() const {
  return std::all_of(entries_.begin(), entries_.end(), [](const ReportEntry& e) { return e.pass; });
}

const ReportEntry* Report::find(const std::string& entry_name) const {
  for (const ReportEntry& e : entries_)
    if (e.name == entry_name) return &e;
  return nullptr;
}

const ReportEntry& Report::at(const std::string& entry_name) const {
  if (const ReportEntry* e = find(entry_name)) return *e;
  throw std::out_of_range("report entry not found: " + entry_name);
}

double Report::min_margin() const {
  double m = std::numeric_limits<double>::infinity();
  for (const ReportEntry& e : entries_) m = std::min(m, e.margin);
  return m;
}

std::size_t Report::failures() const {
  return static_cast<std::size_t>(
      std::count_if(entries_.begin(), entries_.end(), [](const ReportEntry& e) { return !e.pass; }));
}

nlohmann::json Report::to_json() const {
  nlohmann::json entries = nlohmann::json::array();
  nlohmann::json margins = nlohmann::json::array();
  for (const ReportEntry& e : entries_) {
    entries.push_back({{"name", e.name},
                       {"value", finite_or_string(e.value)},
                       {"margin", finite_or_string(e.margin)},
                       {"tolerance", e.tolerance},
                       {"pass", e.pass}});
    margins.push_back(finite_or_string(e.margin));
  }
  return {{"lemma", name_},   {"config", config_},       {"metadata", metadata_}, {"entries", entries},
          {"margins", margins}, {"notes", notes_}, {"artifacts", artifacts_}, {"pass", pass()}};
}

std::string Report::entries_csv() const {
  std::ostringstream out;
  out << std::setprecision(17) << "name,value,margin,tolerance,pass\n";
  for (const ReportEntry& e : entries_)
    out << e.name << ',' << e.value << ',' << e.margin << ',' << e.tolerance << ',' << (e.pass ? 1 : 0) << '\n';
  return out.str();
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << std::setprecision(17);
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << row[k];
    out << '\n';
  }
}

}  // namespace kobalab
