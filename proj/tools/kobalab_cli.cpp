#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "kobalab/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"kobalab: Kobayashi metric and scaling experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> jobs;
  app.add_option("--config", config_path, "JSON experiment configuration")->required();
  app.add_option("--seed", seed, "root seed (overrides the config)");
  app.add_option("--out", out, "output directory (overrides the config)");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  std::string lemma;
  auto* verify = app.add_subcommand("verify-lemma", "check one of the lemma suites");
  verify->add_option("lemma", lemma, "esti | disc | ball | final")
      ->required()
      ->check(CLI::IsMember({"esti", "disc", "ball", "final"}));
  auto* eval = app.add_subcommand("kobayashi-eval", "compare metric and distance estimators with the closed forms");
  auto* scale = app.add_subcommand("scale-run", "build the scaling stages and their diagnostics");
  auto* replay = app.add_subcommand("theorem-replay", "replay the main theorem on the ball");
  for (auto* sub : {verify, eval, scale, replay}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::string command;
  if (verify->parsed()) command = "verify-lemma " + lemma;
  else if (eval->parsed()) command = "kobayashi-eval";
  else if (scale->parsed()) command = "scale-run";
  else command = "theorem-replay";

  try {
    kobalab::ExperimentConfig config = kobalab::load_config(config_path);
    if (seed) config.seed = *seed;
    if (out) config.output = *out;
    if (jobs) config.jobs = *jobs;
    const kobalab::RunResult result = kobalab::run(config, command);
    const kobalab::Report& report = result.report;
    std::cout << command << ": " << (report.pass() ? "PASS" : "FAIL") << " (" << report.entries().size()
              << " entries, " << report.failures() << " failed, min margin " << report.min_margin() << ")\n";
    for (const auto& e : report.entries())
      if (!e.pass) std::cout << "  failed: " << e.name << " value=" << e.value << " margin=" << e.margin << "\n";
    if (report.notes().contains("error")) std::cout << "  error: " << report.notes()["error"] << "\n";
    std::cout << "report: " << result.report_path << "\n";
    return result.exit_code;
  } catch (const kobalab::Error& e) {
    std::cerr << e.what() << "\n";
    return e.kind() == kobalab::ErrorKind::ConfigError ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
