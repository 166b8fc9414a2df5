#pragma once

// Controller training for a fixed morphology. The search space is one
// (amplitude, phase, offset) triple per actuated edge; optimizers work in an
// unbounded genotype space that is squashed onto the parameter box before
// simulation. Episode execution is injected so the engine can meter budget
// (and tests can substitute analytic landscapes); a refused episode stops
// training early.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "morphx/genome.hpp"
#include "morphx/optimizers.hpp"
#include "morphx/physics.hpp"
#include "morphx/rng.hpp"

namespace morphx {

struct ControllerParams {
  std::vector<double> values;  // size == control_dim of the genome
};

struct TrainingBudget {
  int episodes = 64;       // per-design training episodes
  int episode_steps = 500;  // simulator steps per episode
};

inline void validate_budget(const TrainingBudget& budget) {
  if (budget.episodes < 1 || budget.episode_steps < 1)
    throw std::invalid_argument("training budget fields must be >= 1");
}

enum class ControlAlgorithm { kCmaes, kMuCommaLambda };

struct TrainResult {
  ControllerParams best;
  double objective = -std::numeric_limits<double>::infinity();
  std::uint64_t steps_used = 0;  // simulator steps actually consumed
  int episodes_run = 0;
  // Steps of the episode that produced `objective`; re-simulating `best` for
  // exactly this many steps reproduces `objective`.
  std::uint64_t best_episode_steps = 0;
  bool stopped_early = false;  // an episode was refused (budget exhausted)
  bool from_cache = false;     // set by the engine's training memo, not here
};

// Runs one episode of the given controller, or refuses (nullopt) when the
// caller's budget cannot fund any further step. episode_steps is the
// requested nominal length; implementations may run fewer steps and report
// the actual count in the result.
using EpisodeFn = std::function<std::optional<EpisodeResult>(
    const ControllerParams&, int episode_steps)>;

namespace detail {

struct ParamBox {
  double lo;
  double hi;
};

inline ParamBox param_box(int index) {
  switch (index % kParamsPerActuator) {
    case 0: return {-kMaxAmplitude, kMaxAmplitude};
    case 1: return {-std::numbers::pi, std::numbers::pi};
    default: return {-kMaxOffset, kMaxOffset};
  }
}

// Genotype coordinates are clamped to [-1, 1] and mapped linearly onto each
// parameter's box; the box centre corresponds to genotype zero.
inline ControllerParams params_from_genotype(const std::vector<double>& g) {
  ControllerParams p;
  p.values.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto box = param_box(static_cast<int>(i));
    const double unit = clamp(g[i], -1.0, 1.0);
    p.values[i] = box.lo + (box.hi - box.lo) * (unit + 1.0) / 2.0;
  }
  return p;
}

// Initial step size: 0.3 of the genotype box width ([-1, 1] per coordinate).
inline constexpr double kGenotypeSigma0 = 0.6;

// Evaluates one candidate, folding steps/episode counts and the best-so-far
// controller into `out`. Returns the candidate's own episode objective, or
// nullopt when the episode was refused and training must stop.
inline std::optional<double> evaluate_candidate(const EpisodeFn& episode,
                                                const ControllerParams& params,
                                                int episode_steps,
                                                TrainResult& out) {
  const auto result = episode(params, episode_steps);
  if (!result) {
    out.stopped_early = true;
    return std::nullopt;
  }
  out.steps_used += result->steps_consumed;
  ++out.episodes_run;
  if (out.episodes_run == 1 || result->objective > out.objective) {
    out.best = params;
    out.objective = result->objective;
    out.best_episode_steps = result->steps_consumed;
  }
  return result->objective;
}

}  // namespace detail

// Trains a controller for `genome` with `budget.episodes` training episodes
// of `budget.episode_steps` steps each. Generations are sized
// floor(episodes / lambda) with lambda = 4 + floor(3 ln d); budgets smaller
// than one generation degrade to pure random search over the parameter box.
// A zero-dimensional controller costs exactly one evaluation episode. The
// stream is taken by value: training is a pure function of (genome, budget,
// stream, algorithm) given a deterministic EpisodeFn.
inline TrainResult train_controller(const MorphologyGenome& genome,
                                    const TrainingBudget& budget,
                                    RngStream rng, ControlAlgorithm algorithm,
                                    const EpisodeFn& episode) {
  validate_budget(budget);
  const int dim = complexity(genome);
  TrainResult out;

  if (dim == 0) {
    detail::evaluate_candidate(episode, ControllerParams{},
                               budget.episode_steps, out);
    return out;
  }

  const int lambda = cma_default_lambda(dim);
  if (budget.episodes < lambda) {
    for (int i = 0; i < budget.episodes; ++i) {
      std::vector<double> genotype(dim);
      for (auto& g : genotype) g = rng.uniform(-1.0, 1.0);
      if (!detail::evaluate_candidate(episode,
                                      detail::params_from_genotype(genotype),
                                      budget.episode_steps, out))
        return out;
    }
    return out;
  }

  const int generations = budget.episodes / lambda;
  if (algorithm == ControlAlgorithm::kCmaes) {
    CmaState state = cma_init(dim, detail::kGenotypeSigma0);
    for (int gen = 0; gen < generations; ++gen) {
      const auto candidates = cma_ask(state, rng);
      std::vector<double> fitness(candidates.size());
      for (std::size_t k = 0; k < candidates.size(); ++k) {
        const std::vector<double> genotype(candidates[k].data(),
                                           candidates[k].data() + dim);
        const auto objective = detail::evaluate_candidate(
            episode, detail::params_from_genotype(genotype),
            budget.episode_steps, out);
        if (!objective) return out;
        fitness[k] = *objective;
      }
      state = cma_tell(state, candidates, fitness);
    }
    return out;
  }

  EsConfig config;
  config.lambda = lambda;
  config.mu = std::max(1, lambda / 2);
  config.elitist = false;
  std::vector<std::vector<double>> population(lambda);
  for (auto& genotype : population) {
    genotype.resize(dim);
    for (auto& g : genotype) g = detail::kGenotypeSigma0 * rng.normal();
  }
  auto mutate_genotype = [](const std::vector<double>& parent, RngStream& r) {
    auto child = parent;
    for (auto& g : child) g += 0.3 * r.normal();
    return child;
  };
  for (int gen = 0; gen < generations; ++gen) {
    std::vector<double> fitness(population.size());
    for (std::size_t k = 0; k < population.size(); ++k) {
      const auto objective = detail::evaluate_candidate(
          episode, detail::params_from_genotype(population[k]),
          budget.episode_steps, out);
      if (!objective) return out;
      fitness[k] = *objective;
    }
    if (gen + 1 < generations)
      population = es_step(population, fitness, config, mutate_genotype, rng);
  }
  return out;
}

// Convenience wrapper running real simulator episodes at the default dt.
inline TrainResult train_controller(
    const MorphologyGenome& genome, const TrainingBudget& budget,
    RngStream rng, ControlAlgorithm algorithm = ControlAlgorithm::kCmaes) {
  const EpisodeFn episode =
      [&genome](const ControllerParams& params,
                int steps) -> std::optional<EpisodeResult> {
    return simulate_episode(genome.graph, params.values, steps);
  };
  return train_controller(genome, budget, rng, algorithm, episode);
}

}  // namespace morphx
