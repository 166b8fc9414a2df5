#pragma once

// Orchestration behind the CLI. `run` executes every (arm, repetition) pair
// of an experiment config into one output directory, resumable and
// parallelizable across runs; `analyze` loads those run logs and writes the
// four standard analyses; `replay` re-simulates a logged row and checks that
// the stored objective reproduces exactly.

#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "morphx/analysis.hpp"
#include "morphx/config.hpp"
#include "morphx/engine.hpp"
#include "morphx/runlog_io.hpp"

namespace morphx {

inline std::string runlog_filename(const std::string& arm,
                                   std::uint64_t master_seed) {
  return arm + "_" + std::to_string(master_seed) + ".csv";
}

// A run file is reusable only if it parses and ends in a final row.
inline bool runlog_complete(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return false;
  try {
    const RunLog log = runlog_from_csv(read_file(path));
    return !log.rows.empty() && log.rows.back().event == LogEvent::kFinal;
  } catch (const std::exception&) {
    return false;
  }
}

// Runs all arms and repetitions into out_dir. A canonical copy of the config
// is stored alongside the logs; reusing a directory with a different config
// is an error. Completed run files are skipped (resume), partial or corrupt
// files are recomputed and atomically replaced. With jobs > 1, whole runs
// execute in parallel; each run itself stays single-threaded and the
// resulting files are identical regardless of jobs.
inline void run_experiment(const ExperimentConfig& config,
                           const std::filesystem::path& out_dir,
                           std::uint64_t seed_offset, int jobs,
                           std::ostream& out) {
  std::filesystem::create_directories(out_dir);
  const std::string canonical = serialize_experiment_config(config);
  const std::filesystem::path config_copy = out_dir / "config.cfg";
  if (std::filesystem::exists(config_copy)) {
    if (read_file(config_copy) != canonical)
      throw std::runtime_error(
          "output directory holds runs for a different configuration: " +
          config_copy.string());
  } else {
    write_file_atomic(config_copy, canonical);
  }

  struct Task {
    const ArmConfig* arm;
    int rep;
    std::uint64_t master_seed;
    std::filesystem::path path;
  };
  std::vector<Task> tasks;
  for (const auto& arm : config.arms)
    for (int rep = 0; rep < config.repetitions; ++rep) {
      const std::uint64_t master_seed =
          config.seed + static_cast<std::uint64_t>(rep) + seed_offset;
      tasks.push_back({&arm, rep, master_seed,
                       out_dir / runlog_filename(arm.name, master_seed)});
    }

  std::atomic<std::size_t> cursor{0};
  std::mutex io_mutex;
  std::exception_ptr failure;
  auto worker = [&]() {
    for (;;) {
      const std::size_t index = cursor.fetch_add(1);
      if (index >= tasks.size()) return;
      const Task& task = tasks[index];
      try {
        if (runlog_complete(task.path)) {
          const std::scoped_lock lock(io_mutex);
          out << "skip " << task.path.filename().string() << " (complete)\n";
          continue;
        }
        const ScheduleConfig schedule =
            schedule_config_for(config, *task.arm, task.rep, seed_offset);
        const RunOutcome outcome = run_schedule(schedule);
        save_runlog(task.path, outcome.log);
        const std::scoped_lock lock(io_mutex);
        out << "run " << task.path.filename().string()
            << " used_steps=" << outcome.used_steps
            << " phase1=" << outcome.phase1_steps
            << " retrain=" << outcome.retrain_steps
            << " final=" << fmt_double(outcome.log.rows.back().objective)
            << "\n";
      } catch (...) {
        const std::scoped_lock lock(io_mutex);
        if (!failure) failure = std::current_exception();
        cursor.store(tasks.size());
        return;
      }
    }
  };

  jobs = std::max(1, jobs);
  std::vector<std::thread> pool;
  for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& thread : pool) thread.join();
  if (failure) std::rethrow_exception(failure);
}

namespace detail {

// All completed runs of one arm in the directory, sorted by master seed
// (parsed from the file name, so seed offsets survive a round trip).
inline std::vector<RunLog> load_arm_runs(const std::filesystem::path& dir,
                                         const ExperimentConfig& config,
                                         const ArmConfig& arm) {
  std::vector<std::pair<std::uint64_t, std::filesystem::path>> files;
  const std::string prefix = arm.name + "_";
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() <= prefix.size() + 4) continue;
    if (name.rfind(prefix, 0) != 0) continue;
    if (name.substr(name.size() - 4) != ".csv") continue;
    const std::string middle =
        name.substr(prefix.size(), name.size() - prefix.size() - 4);
    if (middle.empty() ||
        middle.find_first_not_of("0123456789") != std::string::npos)
      continue;
    files.emplace_back(parse_u64(middle), entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<RunLog> logs;
  for (const auto& [seed, path] : files) {
    RunLog log = runlog_from_csv(read_file(path));
    log.schedule = arm.kind;
    log.master_seed = seed;
    log.max_steps = config.max_steps;
    logs.push_back(std::move(log));
  }
  return logs;
}

inline const ArmConfig& find_arm(const ExperimentConfig& config,
                                 const std::string& name) {
  for (const auto& arm : config.arms)
    if (arm.name == name) return arm;
  throw std::runtime_error("config has no arm named '" + name + "'");
}

// Collects the named arms or fails with every missing file pattern at once.
inline std::map<std::string, std::vector<RunLog>> require_arms(
    const std::filesystem::path& dir, const ExperimentConfig& config,
    const std::vector<std::string>& names) {
  std::map<std::string, std::vector<RunLog>> result;
  std::string missing;
  for (const auto& name : names) {
    auto logs = load_arm_runs(dir, config, find_arm(config, name));
    if (logs.empty())
      missing += "\n  " + (dir / (name + "_<seed>.csv")).string();
    else
      result.emplace(name, std::move(logs));
  }
  if (!missing.empty())
    throw std::runtime_error("missing run logs for this analysis:" + missing);
  return result;
}

inline std::string curve_csv(
    const std::vector<std::pair<std::string, const CurveBundle*>>& series) {
  std::string out = "series,checkpoint,mean,lower,upper,runs\n";
  for (const auto& [name, bundle] : series)
    for (std::size_t c = 0; c < bundle->checkpoints.size(); ++c) {
      int runs = 0;
      for (const auto& run : bundle->per_run)
        if (!std::isnan(run[c])) ++runs;
      out += name + ',' + std::to_string(bundle->checkpoints[c]) + ',' +
             fmt_double(bundle->mean[c]) + ',' + fmt_double(bundle->lower[c]) +
             ',' + fmt_double(bundle->upper[c]) + ',' + std::to_string(runs) +
             '\n';
    }
  return out;
}

}  // namespace detail

// Final-checkpoint summary of a curve bundle.
struct ArmSummary {
  std::string arm;
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

// experiment 1: reduced-quantity design search vs the standard budget, with
//               and without a final retraining phase
// experiment 2: reducing episode count vs reducing episode length
// experiment 3: retraining at every new best vs retraining once at the end,
//               plus the probability that each new best survives retraining
// experiment 4: incumbent complexity under reduced budgets
inline void analyze_experiment(const std::filesystem::path& out_dir,
                               int experiment, std::ostream& out) {
  const ExperimentConfig config =
      load_experiment_config(out_dir / "config.cfg");
  const auto grid = checkpoint_grid(config.max_steps, config.checkpoints);
  RngStream rng = derive_stream(config.seed, StreamKind::Analysis,
                                static_cast<std::uint64_t>(experiment));
  const auto summarize = [&](CurveBundle& bundle) {
    summarize_curve(bundle, rng, config.confidence,
                    config.bootstrap_resamples);
  };
  const auto report_final = [&](std::string_view label,
                                const CurveBundle& bundle) {
    out << label << ": final mean=" << fmt_double(bundle.mean.back())
        << " ci=[" << fmt_double(bundle.lower.back()) << ", "
        << fmt_double(bundle.upper.back()) << "]\n";
  };

  switch (experiment) {
    case 1: {
      auto arms = detail::require_arms(
          out_dir, config, {"single_q100", "single_q025", "retrain_end_q025"});
      std::map<std::string, CurveBundle> curves;
      for (const auto& [name, logs] : arms) {
        curves[name] = best_objective_curve(logs, grid);
        summarize(curves[name]);
      }
      CurveBundle difference = difference_curve(curves["retrain_end_q025"],
                                                curves["single_q100"]);
      summarize(difference);
      write_file_atomic(out_dir / "exp1_curves.csv",
                        detail::curve_csv({
                            {"single_q100", &curves["single_q100"]},
                            {"single_q025", &curves["single_q025"]},
                            {"retrain_end_q025", &curves["retrain_end_q025"]},
                        }));
      write_file_atomic(
          out_dir / "exp1_difference.csv",
          detail::curve_csv({{"retrain_end_q025-single_q100", &difference}}));
      for (const auto& [name, bundle] : curves) report_final(name, bundle);
      report_final("difference retrain_end_q025-single_q100", difference);
      break;
    }
    case 2: {
      const std::vector<std::string> names{
          "retrain_end_q050", "retrain_end_q025", "retrain_end_q010",
          "retrain_end_l050", "retrain_end_l025", "retrain_end_l010"};
      auto arms = detail::require_arms(out_dir, config, names);
      std::map<std::string, CurveBundle> curves;
      std::vector<std::pair<std::string, const CurveBundle*>> series;
      std::string final_csv = "arm,mean,lower,upper\n";
      for (const auto& name : names) {
        curves[name] = best_objective_curve(arms[name], grid);
        summarize(curves[name]);
        series.emplace_back(name, &curves[name]);
        final_csv += name + ',' + fmt_double(curves[name].mean.back()) + ',' +
                     fmt_double(curves[name].lower.back()) + ',' +
                     fmt_double(curves[name].upper.back()) + '\n';
        report_final(name, curves[name]);
      }
      write_file_atomic(out_dir / "exp2_curves.csv",
                        detail::curve_csv(series));
      write_file_atomic(out_dir / "exp2_final.csv", final_csv);
      break;
    }
    case 3: {
      const std::vector<std::string> fractions{"q050", "q025", "q010"};
      const std::vector<std::string> single_arms{
          "single_q100", "single_q050", "single_q025", "single_q010"};
      std::vector<std::string> names = single_arms;
      for (const auto& f : fractions) {
        names.push_back("retrain_every_" + f);
        names.push_back("retrain_end_" + f);
      }
      auto arms = detail::require_arms(out_dir, config, names);
      std::map<std::string, CurveBundle> diffs;
      std::vector<std::pair<std::string, const CurveBundle*>> series;
      for (const auto& f : fractions) {
        CurveBundle every =
            best_objective_curve(arms["retrain_every_" + f], grid);
        CurveBundle end = best_objective_curve(arms["retrain_end_" + f], grid);
        const std::string label = "retrain_every-retrain_end_" + f;
        diffs[label] = difference_curve(every, end);
        summarize(diffs[label]);
        series.emplace_back(label, &diffs[label]);
        report_final(label, diffs[label]);
      }
      write_file_atomic(out_dir / "exp3_difference.csv",
                        detail::curve_csv(series));

      const TrainingBudget retrain{config.base_episodes,
                                   config.base_episode_steps};
      std::string improvement_csv = "series,checkpoint,probability\n";
      for (const auto& name : single_arms) {
        const auto curve = improvement_probability(
            arms[name], retrain, grid, Environment{},
            config.control_algorithm);
        for (const auto& point : curve)
          improvement_csv += name + ',' + std::to_string(point.checkpoint) +
                             ',' + fmt_double(point.probability) + '\n';
        out << name << ": final improvement probability="
            << fmt_double(curve.back().probability) << "\n";
      }
      write_file_atomic(out_dir / "exp3_improvement.csv", improvement_csv);
      break;
    }
    case 4: {
      const std::vector<std::string> names{"single_q100", "single_q050",
                                           "single_q025", "single_q010"};
      auto arms = detail::require_arms(out_dir, config, names);
      std::map<std::string, CurveBundle> curves;
      std::vector<std::pair<std::string, const CurveBundle*>> series;
      for (const auto& name : names) {
        curves[name] = complexity_curve(arms[name], grid);
        summarize(curves[name]);
        series.emplace_back(name, &curves[name]);
        report_final("complexity " + name, curves[name]);
      }
      write_file_atomic(out_dir / "exp4_complexity.csv",
                        detail::curve_csv(series));
      break;
    }
    default:
      throw std::runtime_error("experiment must be 1, 2, 3 or 4");
  }
}

struct ReplayOutcome {
  double logged_objective = 0.0;
  double recomputed_objective = 0.0;
  bool exact_match = false;
  std::uint64_t steps = 0;
};

// Re-simulates the payload of one logged row, writing a per-step trace (one
// line per simulated step: index, centre of mass x, node positions). The
// recomputed objective must reproduce the logged value exactly; any
// difference is reported, not hidden.
inline ReplayOutcome replay_row(const std::filesystem::path& log_path,
                                std::size_t row_index,
                                const std::filesystem::path& trace_path) {
  const RunLog log = runlog_from_csv(read_file(log_path));
  if (row_index >= log.rows.size())
    throw std::runtime_error("row " + std::to_string(row_index) +
                             " out of range; log has " +
                             std::to_string(log.rows.size()) + " rows");
  const RunLogRow& row = log.rows[row_index];
  if (row.payload.empty())
    throw std::runtime_error(
        "row " + std::to_string(row_index) +
        " is a design_eval row and carries no replayable payload");
  const PayloadData payload = parse_payload(row.payload);
  if (payload.episode_steps == 0)
    throw std::runtime_error("row " + std::to_string(row_index) +
                             " logged no simulated episode");

  std::string trace = "step,com_x,nodes\n";
  const StepObserver observer = [&](int step,
                                    const std::vector<Vec2>& positions) {
    trace += std::to_string(step) + ',' +
             fmt_double(detail::com_x(payload.genome.graph, positions)) + ',';
    for (std::size_t i = 0; i < positions.size(); ++i) {
      if (i) trace += '/';
      trace += fmt_double(positions[i].x) + ':' + fmt_double(positions[i].y);
    }
    trace += '\n';
  };
  const EpisodeResult result = simulate_episode(
      payload.genome.graph, payload.controller.values,
      static_cast<int>(payload.episode_steps), kDefaultDt, observer);
  write_file_atomic(trace_path, trace);

  ReplayOutcome outcome;
  outcome.logged_objective = row.objective;
  outcome.recomputed_objective = result.objective;
  outcome.exact_match = result.objective == row.objective;
  outcome.steps = result.steps_consumed;
  return outcome;
}

}  // namespace morphx
