// anchoruq: run, validate, or pretty-print config-driven experiments.
//
// Exit codes: 0 success, 1 one or more seeds failed at runtime, 2 bad
// usage / config / missing file.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "auq/experiment.hpp"
#include "auq/version.hpp"

namespace fs = std::filesystem;

namespace {

// --out beats ANCHORUQ_OUT beats the config's "output" field.
fs::path resolve_out_dir(const std::string& cli_out, const nlohmann::json& config) {
  if (!cli_out.empty()) return cli_out;
  if (const char* env = std::getenv("ANCHORUQ_OUT"); env && *env) return env;
  if (config.contains("output") && config.at("output").is_string())
    return config.at("output").get<std::string>();
  return fs::path("runs") / config.value("experiment", "experiment");
}

int cmd_validate(const std::string& config_file) {
  const nlohmann::json config = auq::load_experiment_config(config_file);
  auq::validate_experiment_config(config);
  std::printf("ok: %s (%s, %zu seeds)\n", config_file.c_str(),
              config.at("experiment").get<std::string>().c_str(),
              config.at("seeds").size());
  return 0;
}

int cmd_run(const std::string& config_file, const std::string& cli_out,
            int parallel, bool quiet) {
  const nlohmann::json config = auq::load_experiment_config(config_file);
  auq::validate_experiment_config(config);
  const fs::path out_dir = resolve_out_dir(cli_out, config);
  const auq::ExperimentResult result =
      auq::run_experiment(config, out_dir, parallel, quiet);
  if (!quiet)
    std::printf("report: %s\n", result.report_path.string().c_str());
  if (result.failed_seeds > 0) {
    std::fprintf(stderr, "error: %d seed(s) failed; see report for details\n",
                 result.failed_seeds);
    return 1;
  }
  return 0;
}

int cmd_report(const std::string& dir) {
  const fs::path path = fs::path(dir) / "report.json";
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("no report.json in '" + dir + "'");
  nlohmann::json report;
  in >> report;

  std::printf("experiment: %s\n",
              report.at("experiment").get<std::string>().c_str());
  std::printf("version:    %s\n", report.value("library_version", "?").c_str());
  std::printf("seeds:      %zu (%d failed)\n", report.at("per_seed").size(),
              report.value("failed_seeds", 0));
  std::printf("wall_clock: %.2fs\n", report.value("wall_clock_seconds", 0.0));
  std::printf("aggregate:\n%s\n", report.at("aggregate").dump(2).c_str());
  for (const auto& entry : report.at("per_seed"))
    if (entry.contains("error"))
      std::printf("seed %lld failed: %s\n", entry.at("seed").get<long long>(),
                  entry.at("error").get<std::string>().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"anchor-marginalized uncertainty experiments"};
  app.set_version_flag("--version", std::string("anchoruq ") + auq::kVersion);
  app.require_subcommand(1);

  std::string config_file, out_dir, report_dir;
  int parallel = 1;
  bool quiet = false;

  CLI::App* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_file, "JSON experiment config")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--parallel", parallel, "worker threads for seeds")
      ->check(CLI::PositiveNumber);
  run->add_flag("--quiet", quiet, "suppress progress output");

  CLI::App* validate = app.add_subcommand("validate", "check a config file");
  validate->add_option("config", config_file, "JSON experiment config")
      ->required();

  CLI::App* report = app.add_subcommand("report", "pretty-print a report dir");
  report->add_option("dir", report_dir, "directory holding report.json")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_file, out_dir, parallel, quiet);
    if (validate->parsed()) return cmd_validate(config_file);
    return cmd_report(report_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
