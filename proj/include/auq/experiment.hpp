#pragma once
// Config-driven experiment harness behind the CLI. A JSON document selects
// one of the built-in studies, the harness runs it across seeds (optionally
// in parallel) and writes report.json plus numeric plot tables.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace auq {

// Experiments the harness knows how to run.
const std::vector<std::string>& experiment_names();

// Throws std::invalid_argument naming the offending field by its dotted
// path (e.g. "smo.pool_size: must be >= 1") when the document does not
// describe a runnable experiment. Checks referenced dataset files exist.
void validate_experiment_config(const nlohmann::json& config);

// Reads and parses a config file; errors mention the path.
nlohmann::json load_experiment_config(const std::filesystem::path& path);

struct ExperimentResult {
  nlohmann::json report;               // what was written to report.json
  std::filesystem::path report_path;
  int failed_seeds = 0;
};

// Validates, runs every configured seed, and writes report.json plus the
// experiment's plot CSVs into out_dir (created if missing). A seed that
// throws is recorded as an error entry in the report and counted; the
// remaining seeds still run. `parallel` caps the number of worker threads.
ExperimentResult run_experiment(const nlohmann::json& config,
                                const std::filesystem::path& out_dir,
                                int parallel = 1, bool quiet = false);

}  // namespace auq
