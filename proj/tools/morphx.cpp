// Command-line front end: `run` executes an experiment config into an output
// directory, `analyze` produces the standard analyses from it, `replay`
// re-simulates a logged row and verifies the stored objective.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "morphx/config.hpp"
#include "morphx/experiments.hpp"

namespace {

int default_jobs() {
  if (const char* env = std::getenv("MORPHX_JOBS")) {
    const int jobs = std::atoi(env);
    if (jobs >= 1) return jobs;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"morphology and controller co-optimization experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int jobs = default_jobs();
  std::uint64_t seed_offset = 0;
  auto* run = app.add_subcommand(
      "run", "execute every (arm, repetition) run of a config");
  run->add_option("--config", config_path, "experiment config file")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory for run logs")
      ->required();
  run->add_option("--jobs", jobs,
                  "parallel runs (default $MORPHX_JOBS or 1)");
  run->add_option("--seed-offset", seed_offset,
                  "added to every master seed (extra repetitions)");

  std::string analyze_dir;
  int experiment = 0;
  auto* analyze =
      app.add_subcommand("analyze", "write analysis files for one experiment");
  analyze->add_option("--out", analyze_dir, "directory holding run logs")
      ->required();
  analyze->add_option("--experiment", experiment, "experiment number (1-4)")
      ->required();

  std::string log_path;
  std::size_t row_index = 0;
  std::string trace_path;
  auto* replay = app.add_subcommand(
      "replay", "re-simulate one logged row and verify its objective");
  replay->add_option("--log", log_path, "run log file")
      ->required()
      ->check(CLI::ExistingFile);
  replay->add_option("--row", row_index, "0-based row index")->required();
  replay->add_option("--trace", trace_path,
                     "trace output path (default <log>.row<N>.trace.csv)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      morphx::run_experiment(morphx::load_experiment_config(config_path),
                             out_dir, seed_offset, jobs, std::cout);
      return 0;
    }
    if (analyze->parsed()) {
      morphx::analyze_experiment(analyze_dir, experiment, std::cout);
      return 0;
    }
    if (trace_path.empty())
      trace_path =
          log_path + ".row" + std::to_string(row_index) + ".trace.csv";
    const morphx::ReplayOutcome outcome =
        morphx::replay_row(log_path, row_index, trace_path);
    std::cout << "logged=" << morphx::fmt_double(outcome.logged_objective)
              << " recomputed="
              << morphx::fmt_double(outcome.recomputed_objective)
              << " steps=" << outcome.steps << " trace=" << trace_path
              << (outcome.exact_match ? " MATCH" : " MISMATCH") << "\n";
    return outcome.exact_match ? 0 : 1;
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 1;
  }
}
