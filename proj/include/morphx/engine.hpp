#pragma once

// Run engine for the three training schedules:
//   single_phase            train each design once at the reduced budget
//   retrain_end             reserve the retraining cost, run a reduced-budget
//                           design search, then retrain the winner from a
//                           fresh controller initialization
//   retrain_every_new_best  retrain every design whose reduced-budget score
//                           beats the incumbent's retrained score
//
// Controller training streams are keyed by genome id, so training a given
// genome with a given budget is a pure deterministic function within a run.
// The engine memoizes completed trainings on (genome id, budget); replaying a
// known result consumes zero simulator steps and emits no retrain row. This
// makes retraining with unreduced resources literally a replay: with
// reduction 1.0 and retrain budget equal to the effective budget, both
// two-phase schedules produce byte-identical run logs to single_phase.

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "morphx/budget.hpp"
#include "morphx/controller.hpp"
#include "morphx/genome.hpp"
#include "morphx/optimizers.hpp"
#include "morphx/physics.hpp"
#include "morphx/rng.hpp"
#include "morphx/text.hpp"

namespace morphx {

enum class ScheduleKind { kSinglePhase, kRetrainEnd, kRetrainEveryNewBest };

inline std::string_view schedule_name(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::kSinglePhase: return "single_phase";
    case ScheduleKind::kRetrainEnd: return "retrain_end";
    default: return "retrain_every_new_best";
  }
}

inline ScheduleKind schedule_from_name(std::string_view name) {
  if (name == "single_phase") return ScheduleKind::kSinglePhase;
  if (name == "retrain_end") return ScheduleKind::kRetrainEnd;
  if (name == "retrain_every_new_best")
    return ScheduleKind::kRetrainEveryNewBest;
  throw std::invalid_argument("unknown schedule '" + std::string(name) + "'");
}

enum class LogEvent { kDesignEval, kNewBest, kRetrain, kFinal };

inline std::string_view event_name(LogEvent event) {
  switch (event) {
    case LogEvent::kDesignEval: return "design_eval";
    case LogEvent::kNewBest: return "new_best";
    case LogEvent::kRetrain: return "retrain";
    default: return "final";
  }
}

inline LogEvent event_from_name(std::string_view name) {
  if (name == "design_eval") return LogEvent::kDesignEval;
  if (name == "new_best") return LogEvent::kNewBest;
  if (name == "retrain") return LogEvent::kRetrain;
  if (name == "final") return LogEvent::kFinal;
  throw std::invalid_argument("unknown event '" + std::string(name) + "'");
}

struct RunLogRow {
  std::uint64_t used_steps = 0;  // ledger total after the event
  LogEvent event = LogEvent::kDesignEval;
  std::string genome_id;
  double objective = 0.0;
  int complexity = 0;
  std::string payload;  // genome+controller for new_best/retrain/final rows
};

struct RunLog {
  ScheduleKind schedule = ScheduleKind::kSinglePhase;
  std::uint64_t master_seed = 0;
  std::uint64_t max_steps = 0;
  std::vector<RunLogRow> rows;
};

struct ScheduleConfig {
  ScheduleKind schedule = ScheduleKind::kSinglePhase;
  std::uint64_t master_seed = 0;
  std::uint64_t max_steps = 200000;
  ReductionConfig reduction;
  TrainingBudget retrain_budget{64, 500};  // unreduced resources by default
  ControlAlgorithm control_algorithm = ControlAlgorithm::kCmaes;
  EsConfig design_config{8, 16, true};
  double size_bias = 0.5;
};

inline void validate_schedule_config(const ScheduleConfig& config) {
  validate_reduction(config.reduction);
  validate_budget(config.retrain_budget);
  if (config.max_steps < 1)
    throw std::invalid_argument("max_steps must be >= 1");
  if (config.design_config.mu < 1 || config.design_config.lambda < 1)
    throw std::invalid_argument("design mu/lambda must be >= 1");
  const TrainingBudget effective = effective_budget(config.reduction);
  if (config.retrain_budget.episodes < effective.episodes ||
      config.retrain_budget.episode_steps < effective.episode_steps)
    throw std::invalid_argument(
        "retrain budget must be at least the effective budget");
}

// Deterministic episode runner; the default simulates the genome's own graph
// at the standard dt. Tests substitute analytic landscapes here.
struct Environment {
  std::function<EpisodeResult(const MorphologyGenome&, const ControllerParams&,
                              int steps)>
      episode = [](const MorphologyGenome& genome,
                   const ControllerParams& params, int steps) {
        return simulate_episode(genome.graph, params.values, steps);
      };
};

// Payload column: genome text, controller values and the episode length that
// produced the row's objective. Comma-free by construction.
inline std::string make_payload(const MorphologyGenome& genome,
                                const ControllerParams& params,
                                std::uint64_t episode_steps) {
  std::string out = serialize_genome(genome);
  out += "|ctrl=";
  for (std::size_t i = 0; i < params.values.size(); ++i) {
    if (i) out += ':';
    out += fmt_double(params.values[i]);
  }
  out += "|steps=" + std::to_string(episode_steps);
  return out;
}

struct PayloadData {
  MorphologyGenome genome;
  ControllerParams controller;
  std::uint64_t episode_steps = 0;
};

inline PayloadData parse_payload(std::string_view text) {
  const auto parts = split(text, '|');
  if (parts.size() != 3 || parts[1].substr(0, 5) != "ctrl=" ||
      parts[2].substr(0, 6) != "steps=")
    throw std::invalid_argument("payload: expected genome|ctrl=...|steps=...");
  PayloadData data;
  data.genome = parse_genome(parts[0]);
  const auto ctrl = parts[1].substr(5);
  if (!ctrl.empty())
    for (const auto item : split(ctrl, ':'))
      data.controller.values.push_back(parse_double(item));
  data.episode_steps = parse_u64(parts[2].substr(6));
  if (static_cast<int>(data.controller.values.size()) !=
      control_dim(data.genome.graph))
    throw std::invalid_argument("payload: controller/genome dimension clash");
  return data;
}

namespace detail {

struct TrainKey {
  std::string genome_id;
  int episodes;
  int episode_steps;
  auto operator<=>(const TrainKey&) const = default;
};

class ScheduleRunner {
 public:
  ScheduleRunner(const ScheduleConfig& config, const Environment& env)
      : config_(config), env_(env), ledger_(config.max_steps) {
    validate_schedule_config(config);
    log_.schedule = config.schedule;
    log_.master_seed = config.master_seed;
    log_.max_steps = config.max_steps;
  }

  RunLog run() {
    const TrainingBudget effective = effective_budget(config_.reduction);
    switch (config_.schedule) {
      case ScheduleKind::kSinglePhase: {
        run_design_phase(effective, config_.max_steps, false);
        append_final(incumbent_->genome, incumbent_->result);
        break;
      }
      case ScheduleKind::kRetrainEnd: {
        const std::uint64_t retrain_cost =
            retrain_is_replay(effective)
                ? 0
                : static_cast<std::uint64_t>(config_.retrain_budget.episodes) *
                      static_cast<std::uint64_t>(
                          config_.retrain_budget.episode_steps);
        if (retrain_cost >= config_.max_steps) {
          run_degenerate_retrain_only();
          break;
        }
        run_design_phase(effective, config_.max_steps - retrain_cost, false);
        Incumbent best = *incumbent_;
        const TrainResult retrained =
            train(best.genome, config_.retrain_budget, StepCategory::kRetrain,
                  config_.max_steps);
        if (retrained.episodes_run > 0) {
          if (!retrained.from_cache)
            append(LogEvent::kRetrain, best.genome, retrained.objective,
                   payload_of(best.genome, retrained));
          best.result = retrained;
        }
        append_final(best.genome, best.result);
        break;
      }
      case ScheduleKind::kRetrainEveryNewBest: {
        run_design_phase(effective, config_.max_steps, true);
        append_final(incumbent_->genome, incumbent_->result);
        break;
      }
    }
    return log_;
  }

  const BudgetLedger& ledger() const { return ledger_; }

 private:
  struct Incumbent {
    MorphologyGenome genome;
    TrainResult result;   // training result backing the incumbent's score
    double score = -std::numeric_limits<double>::infinity();
  };

  bool retrain_is_replay(const TrainingBudget& effective) const {
    return config_.retrain_budget.episodes == effective.episodes &&
           config_.retrain_budget.episode_steps == effective.episode_steps;
  }

  std::string payload_of(const MorphologyGenome& genome,
                         const TrainResult& result) const {
    return make_payload(genome, result.best, result.best_episode_steps);
  }

  void append(LogEvent event, const MorphologyGenome& genome, double objective,
              std::string payload) {
    RunLogRow row;
    row.used_steps = ledger_.used_steps();
    row.event = event;
    row.genome_id = genome.genome_id;
    row.objective = objective;
    row.complexity = complexity(genome);
    row.payload = std::move(payload);
    log_.rows.push_back(std::move(row));
  }

  void append_final(const MorphologyGenome& genome, const TrainResult& result) {
    append(LogEvent::kFinal, genome, result.objective,
           payload_of(genome, result));
  }

  // Trains through the memo. Streams are derived from the genome id, so a
  // repeated (genome, budget) pair replays its cached result at zero cost.
  TrainResult train(const MorphologyGenome& genome,
                    const TrainingBudget& budget, StepCategory category,
                    std::uint64_t step_cap) {
    const TrainKey key{genome.genome_id, budget.episodes,
                       budget.episode_steps};
    if (const auto it = cache_.find(key); it != cache_.end()) {
      TrainResult replay = it->second;
      replay.from_cache = true;
      return replay;
    }
    RngStream stream =
        derive_stream(config_.master_seed, StreamKind::Controller,
                      genome_key(genome.genome_id));
    const EpisodeFn episode =
        [this, &genome, category, step_cap](
            const ControllerParams& params,
            int steps) -> std::optional<EpisodeResult> {
      const std::uint64_t used = ledger_.used_steps();
      const std::uint64_t headroom = step_cap > used ? step_cap - used : 0;
      const std::uint64_t grant =
          std::min<std::uint64_t>(static_cast<std::uint64_t>(steps), headroom);
      if (grant == 0) return std::nullopt;
      EpisodeResult result =
          env_.episode(genome, params, static_cast<int>(grant));
      if (result.steps_consumed > grant)
        throw std::logic_error("episode consumed more steps than granted");
      ledger_.charge(result.steps_consumed, category);
      return result;
    };
    TrainResult result = train_controller(genome, budget, stream,
                                          config_.control_algorithm, episode);
    if (result.episodes_run > 0) cache_.emplace(key, result);
    return result;
  }

  // Evolves designs until the step cap is hit. Every design is trained and
  // scored exactly once; elitist survivors keep their scores. When
  // retrain_hook is set, any design whose reduced score beats the incumbent's
  // retrained score is retrained immediately (charging the same ledger).
  void run_design_phase(const TrainingBudget& effective,
                        std::uint64_t step_cap, bool retrain_on_new_best) {
    RngStream init_rng = derive_stream(config_.master_seed,
                                       StreamKind::DesignInit);
    RngStream mut_rng = derive_stream(config_.master_seed,
                                      StreamKind::DesignMutation);
    // Seeding with mu rather than lambda genomes puts the exploration budget
    // into guided mutants instead of independent random draws.
    std::vector<MorphologyGenome> population;
    for (int i = 0; i < config_.design_config.mu; ++i)
      population.push_back(random_genome(init_rng, config_.size_bias));

    std::map<std::string, double> scores;
    bool out_of_budget = false;
    while (!out_of_budget) {
      for (const auto& genome : population) {
        if (scores.count(genome.genome_id)) continue;
        const TrainResult trained =
            train(genome, effective, StepCategory::kPhase1, step_cap);
        if (trained.episodes_run == 0) {
          out_of_budget = true;
          break;
        }
        scores.emplace(genome.genome_id, trained.objective);
        append(LogEvent::kDesignEval, genome, trained.objective, "");
        if (retrain_on_new_best)
          out_of_budget = handle_retrained_best(genome, trained) ||
                          trained.stopped_early;
        else
          out_of_budget = handle_reduced_best(genome, trained) ||
                          trained.stopped_early;
        if (out_of_budget) break;
      }
      if (out_of_budget) break;
      std::vector<double> fitness;
      fitness.reserve(population.size());
      for (const auto& genome : population)
        fitness.push_back(scores.at(genome.genome_id));
      population = es_step(
          population, fitness, config_.design_config,
          [](const MorphologyGenome& parent, RngStream& rng) {
            return mutate(parent, rng);
          },
          mut_rng);
    }
  }

  // single_phase / retrain_end incumbent: best reduced-budget score so far.
  bool handle_reduced_best(const MorphologyGenome& genome,
                           const TrainResult& trained) {
    if (incumbent_ && trained.objective <= incumbent_->score) return false;
    incumbent_ = Incumbent{genome, trained, trained.objective};
    append(LogEvent::kNewBest, genome, trained.objective,
           payload_of(genome, trained));
    return false;
  }

  // retrain_every_new_best incumbent: compares retrained scores, so a noisy
  // reduced-budget win must survive retraining to dethrone the incumbent.
  // Returns true when the budget died inside the retraining.
  bool handle_retrained_best(const MorphologyGenome& genome,
                             const TrainResult& trained) {
    if (incumbent_ && trained.objective <= incumbent_->score) return false;
    append(LogEvent::kNewBest, genome, trained.objective,
           payload_of(genome, trained));
    const TrainResult retrained =
        train(genome, config_.retrain_budget, StepCategory::kRetrain,
              config_.max_steps);
    if (retrained.episodes_run == 0) {
      // Budget died before the very first retraining: fall back to the
      // reduced-budget result so the run still has a final design.
      if (!incumbent_) incumbent_ = Incumbent{genome, trained, trained.objective};
      return true;
    }
    if (!retrained.from_cache)
      append(LogEvent::kRetrain, genome, retrained.objective,
             payload_of(genome, retrained));
    if (!incumbent_ || retrained.objective > incumbent_->score)
      incumbent_ = Incumbent{genome, retrained, retrained.objective};
    return retrained.stopped_early;
  }

  // Global budget below the retraining cost: no design search is possible.
  // One random design is drawn, logged as a placeholder new_best (it has no
  // reduced-budget score) and retrained under whatever budget exists.
  void run_degenerate_retrain_only() {
    RngStream init_rng = derive_stream(config_.master_seed,
                                       StreamKind::DesignInit);
    const MorphologyGenome genome =
        random_genome(init_rng, config_.size_bias);
    ControllerParams zeros;
    zeros.values.assign(control_dim(genome.graph), 0.0);
    append(LogEvent::kNewBest, genome,
           -std::numeric_limits<double>::infinity(),
           make_payload(genome, zeros, 0));
    TrainResult retrained = train(genome, config_.retrain_budget,
                                  StepCategory::kRetrain, config_.max_steps);
    if (retrained.episodes_run > 0)
      append(LogEvent::kRetrain, genome, retrained.objective,
             payload_of(genome, retrained));
    else
      retrained.best = zeros;
    append_final(genome, retrained);
  }

  ScheduleConfig config_;
  Environment env_;
  BudgetLedger ledger_;
  RunLog log_;
  std::map<TrainKey, TrainResult> cache_;
  std::optional<Incumbent> incumbent_;
};

}  // namespace detail

struct RunOutcome {
  RunLog log;
  std::uint64_t used_steps = 0;
  std::uint64_t phase1_steps = 0;
  std::uint64_t retrain_steps = 0;
};

// Executes one run to budget exhaustion and returns its log plus the final
// ledger readings.
inline RunOutcome run_schedule(const ScheduleConfig& config,
                               const Environment& env = {}) {
  detail::ScheduleRunner runner(config, env);
  RunOutcome outcome;
  outcome.log = runner.run();
  outcome.used_steps = runner.ledger().used_steps();
  outcome.phase1_steps = runner.ledger().phase1_steps();
  outcome.retrain_steps = runner.ledger().retrain_steps();
  return outcome;
}

struct ImprovementPoint {
  std::uint64_t checkpoint = 0;
  double probability = 0.0;  // NaN when no run has an outcome yet
};

// For each run, retrains every logged new_best design with `retrain_budget`
// (streams keyed by genome id, exactly as the engine would) and asks whether
// each successive best was genuinely better than all designs that preceded
// it. The curve is the across-run mean of the latest outcome at or before
// each checkpoint; retraining here is diagnostic and charges no ledger.
inline std::vector<ImprovementPoint> improvement_probability(
    const std::vector<RunLog>& logs, const TrainingBudget& retrain_budget,
    const std::vector<std::uint64_t>& checkpoints,
    const Environment& env = {},
    ControlAlgorithm algorithm = ControlAlgorithm::kCmaes) {
  validate_budget(retrain_budget);
  std::vector<std::vector<std::pair<std::uint64_t, int>>> outcomes;
  for (const auto& log : logs) {
    std::vector<std::pair<std::uint64_t, int>> events;
    double best_retrained = -std::numeric_limits<double>::infinity();
    bool first = true;
    for (const auto& row : log.rows) {
      if (row.event != LogEvent::kNewBest) continue;
      const PayloadData payload = parse_payload(row.payload);
      RngStream stream =
          derive_stream(log.master_seed, StreamKind::Controller,
                        genome_key(payload.genome.genome_id));
      const EpisodeFn episode =
          [&](const ControllerParams& params,
              int steps) -> std::optional<EpisodeResult> {
        return env.episode(payload.genome, params, steps);
      };
      const TrainResult retrained = train_controller(
          payload.genome, retrain_budget, stream, algorithm, episode);
      const bool improved = first || retrained.objective > best_retrained;
      events.emplace_back(row.used_steps, improved ? 1 : 0);
      if (retrained.objective > best_retrained)
        best_retrained = retrained.objective;
      first = false;
    }
    outcomes.push_back(std::move(events));
  }

  std::vector<ImprovementPoint> curve;
  curve.reserve(checkpoints.size());
  for (const std::uint64_t checkpoint : checkpoints) {
    double sum = 0.0;
    int count = 0;
    for (const auto& events : outcomes) {
      int latest = -1;
      for (const auto& [steps, outcome] : events) {
        if (steps > checkpoint) break;
        latest = outcome;
      }
      if (latest >= 0) {
        sum += latest;
        ++count;
      }
    }
    curve.push_back({checkpoint,
                     count ? sum / count
                           : std::numeric_limits<double>::quiet_NaN()});
  }
  return curve;
}

}  // namespace morphx
