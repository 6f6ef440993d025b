#pragma once

// Experiment configuration, command dispatch and artifact emission.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "kobalab/domains.hpp"
#include "kobalab/report.hpp"

namespace kobalab {

struct DomainConfig {
  std::string kind = "ball";  // ball | ellipsoid | siegel | perturbed_ball
  std::vector<double> weights;
  double kappa = 0.1;
};

struct OrbitConfig {
  std::optional<CVector> q;  // defaults to the domain base point
  std::optional<CVector> p;  // defaults to e1 (0 for the Siegel domain)
  double rate = 0.5;
  int first = 2;
  /// Drive the stages with a synthetic sequence q_j -> p instead of automorphisms.
  bool synthetic = false;
  double tilt = 0.5;
};

struct ExperimentConfig {
  int dimension = 2;
  DomainConfig domain;
  OrbitConfig orbit;
  int j_max = 32;
  double chart_radius = 1.0;
  /// Kobayashi radii: a for Q_a and the localization point, b for the inner ball.
  double a = 0.5;
  double b = 1.0;
  /// Euclidean radius of the convergence and inversion sweeps.
  double r = 0.9;
  double eps = 0.1;
  double delta = 1e-3;
  double tol = 1e-10;
  int samples = 1000;
  int configurations = 1000;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string output = "out";
  nlohmann::json raw = nlohmann::json::object();
};

/// Throws Error(ConfigError) naming the offending field path.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);
void validate(const ExperimentConfig& config, const std::string& command);

DomainSpec build_domain(const ExperimentConfig& config);

/// 64-bit FNV-1a of the canonical config dump.
std::uint64_t config_hash(const nlohmann::json& doc);

struct RunResult {
  Report report;
  int exit_code = 0;
  std::string report_path;
};

/// Commands: "verify-lemma esti|disc|ball|final", "kobayashi-eval",
/// "scale-run", "theorem-replay". Writes the JSON report and CSV artifacts
/// into config.output. Exit code 0 when every entry passes, 1 otherwise.
RunResult run(const ExperimentConfig& config, const std::string& command);

}  // namespace kobalab
