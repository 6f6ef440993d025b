#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "kobalab/runner.hpp"

using namespace kobalab;
using nlohmann::json;

namespace {

std::string temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("kobalab_test_" + name);
  std::filesystem::remove_all(dir);
  return dir.string();
}

ErrorKind config_error_of(const json& doc, const std::string& command) {
  try {
    validate(parse_config(doc), command);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::DegenerateInput;
}

std::string error_text(const json& doc, const std::string& command) {
  try {
    validate(parse_config(doc), command);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("parse_config reads nested fields") {
  const json doc = json::parse(R"({
    "dimension": 3,
    "domain": {"kind": "ellipsoid", "weights": [1, 4]},
    "orbit": {"p": [1, 0, 0], "rate": 0.25, "first": 3, "synthetic": true},
    "j_max": 12, "chart_radius": 0.7,
    "radii": {"a": 0.4, "b": 1.2, "r": 0.8},
    "tolerances": {"eps": 0.05, "delta": 1e-4, "tol": 1e-12},
    "samples": 10, "configurations": 20, "seed": 99, "jobs": 2, "output": "x"})");
  const ExperimentConfig c = parse_config(doc);
  CHECK(c.dimension == 3);
  CHECK(c.domain.kind == "ellipsoid");
  CHECK(c.domain.weights == std::vector<double>{1, 4});
  REQUIRE(c.orbit.p);
  CHECK(c.orbit.p->size() == 3);
  CHECK(c.orbit.rate == 0.25);
  CHECK(c.orbit.first == 3);
  CHECK(c.orbit.synthetic);
  CHECK(c.j_max == 12);
  CHECK(c.chart_radius == 0.7);
  CHECK(c.a == 0.4);
  CHECK(c.b == 1.2);
  CHECK(c.r == 0.8);
  CHECK(c.eps == 0.05);
  CHECK(c.delta == 1e-4);
  CHECK(c.tol == 1e-12);
  CHECK(c.seed == 99);
  CHECK(c.jobs == 2);
  CHECK(c.output == "x");
  CHECK_NOTHROW(validate(c, "scale-run"));
}

TEST_CASE("parse_config accepts complex vectors as pairs") {
  const ExperimentConfig c = parse_config(json::parse(R"({"dimension": 2, "orbit": {"q": [[0.1, 0.2], 0]}})"));
  REQUIRE(c.orbit.q);
  CHECK((*c.orbit.q)(0) == Complex(0.1, 0.2));
}

TEST_CASE("config errors name the offending field") {
  CHECK(config_error_of(json{{"radii", {{"a", 1.5}, {"b", 1.0}}}}, "verify-lemma esti") == ErrorKind::ConfigError);
  CHECK(error_text(json{{"radii", {{"a", 1.5}, {"b", 1.0}}}}, "verify-lemma esti").find("radii.b") != std::string::npos);
  CHECK(error_text(json{{"dimension", 1}}, "scale-run").find("dimension") != std::string::npos);
  CHECK(error_text(json{{"orbit", {{"rate", 1.5}}}}, "scale-run").find("orbit.rate") != std::string::npos);
  CHECK(error_text(json{{"domain", "torus"}}, "scale-run").find("domain.kind") != std::string::npos);
  CHECK(error_text(json{{"tolerances", {{"eps", -1}}}}, "scale-run").find("tolerances.eps") != std::string::npos);
  CHECK(error_text(json{{"dimension", "two"}}, "scale-run").find("dimension") != std::string::npos);
  CHECK(error_text(json{{"domain", "siegel"}}, "theorem-replay").find("domain.kind") != std::string::npos);
  CHECK(config_error_of(json::object(), "frobnicate") == ErrorKind::ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), Error);
}

TEST_CASE("config_hash is stable and sensitive") {
  const json a = json{{"dimension", 2}, {"seed", 1}};
  const json b = json{{"seed", 1}, {"dimension", 2}};
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a) != config_hash(json{{"dimension", 2}, {"seed", 2}}));
}

TEST_CASE("build_domain") {
  ExperimentConfig c;
  c.dimension = 3;
  for (const char* kind : {"ball", "ellipsoid", "siegel", "perturbed_ball"}) {
    c.domain.kind = kind;
    const DomainSpec d = build_domain(c);
    CHECK(d.dimension == 3);
    CHECK(d.contains(d.basepoint));
  }
}

TEST_CASE("run writes the report and artifacts") {
  ExperimentConfig c = parse_config(json{{"dimension", 2}, {"samples", 50}, {"seed", 3}});
  c.output = temp_dir("disc");
  const RunResult r = run(c, "verify-lemma disc");
  CHECK(r.exit_code == 0);
  CHECK(std::filesystem::exists(r.report_path));
  std::ifstream in(r.report_path);
  const json doc = json::parse(in);
  CHECK(doc.at("pass").get<bool>());
  CHECK(doc.at("metadata").contains("config_hash"));
  CHECK(doc.at("metadata").at("seed").get<std::uint64_t>() == 3);
  for (const auto& e : doc.at("entries")) {
    CHECK(e.contains("name"));
    CHECK(e.contains("value"));
    CHECK(e.contains("margin"));
    CHECK(e.contains("pass"));
  }
  for (const std::string& path : r.report.artifacts()) CHECK(std::filesystem::exists(path));
}

TEST_CASE("repeated runs are identical and independent of the worker count") {
  const json doc = json{{"dimension", 3}, {"samples", 200}, {"configurations", 100}, {"seed", 7}};
  std::vector<std::vector<double>> margins;
  for (int jobs : {1, 1, 3}) {
    ExperimentConfig c = parse_config(doc);
    c.jobs = jobs;
    c.output = temp_dir("esti_" + std::to_string(jobs));
    const RunResult r = run(c, "verify-lemma esti");
    CHECK(r.exit_code == 0);
    std::vector<double> m;
    for (const auto& e : r.report.entries()) m.push_back(e.margin);
    margins.push_back(m);
  }
  CHECK(margins[0] == margins[1]);
  CHECK(margins[0] == margins[2]);
}

TEST_CASE("margin failures exit with status 1") {
  // An orbit that never leaves the coarse chart at j = 2 makes the localization checks fail.
  ExperimentConfig c = parse_config(json{{"dimension", 2}, {"j_max", 8}, {"chart_radius", 0.2}, {"samples", 50}});
  c.output = temp_dir("fail");
  const RunResult r = run(c, "scale-run");
  CHECK(r.exit_code == 1);
  CHECK_FALSE(r.report.pass());
}

TEST_CASE("scale-run on the ellipsoid emits stage and cloud CSVs") {
  ExperimentConfig c = parse_config(json::parse(R"({
    "dimension": 2, "domain": {"kind": "ellipsoid", "weights": [1, 4]},
    "orbit": {"p": [0.8660254037844386, 0.25], "rate": 0.5, "first": 4},
    "j_max": 14, "samples": 100})"));
  c.output = temp_dir("ellipsoid");
  const RunResult r = run(c, "scale-run");
  CHECK(r.exit_code == 0);
  std::ifstream stages(std::filesystem::path(c.output) / "stages.csv");
  std::string header;
  std::getline(stages, header);
  CHECK(header.find("hausdorff_dev") != std::string::npos);
  CHECK(std::filesystem::exists(std::filesystem::path(c.output) / "cloud.csv"));
}
