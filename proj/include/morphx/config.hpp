#pragma once

// Experiment configuration files: flat `key = value` lines, `#` comments,
// schedule arms namespaced as `schedule.<arm>.<field>`. Parsing is strict;
// unknown keys, duplicate keys and malformed values fail with the file name
// and line number. serialize_experiment_config writes a canonical form, so a
// resolved config copy is byte-stable.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "morphx/engine.hpp"
#include "morphx/runlog_io.hpp"
#include "morphx/text.hpp"

namespace morphx {

struct ArmConfig {
  std::string name;
  ScheduleKind kind = ScheduleKind::kSinglePhase;
  double reduced_quantity = 1.0;
  double reduced_length = 1.0;
  int retrain_episodes = 0;       // 0: use base_episodes
  int retrain_episode_steps = 0;  // 0: use base_episode_steps
};

struct ExperimentConfig {
  int repetitions = 30;
  std::uint64_t seed = 1000;
  std::uint64_t max_steps = 200000;
  int base_episodes = 64;
  int base_episode_steps = 500;
  int design_mu = 8;
  int design_lambda = 16;
  double size_bias = 0.5;
  ControlAlgorithm control_algorithm = ControlAlgorithm::kCmaes;
  int checkpoints = 64;
  int bootstrap_resamples = 10000;
  double confidence = 0.95;
  std::vector<ArmConfig> arms;  // sorted by name
};

namespace detail {

struct ConfigLine {
  std::string key;
  std::string value;
  int line_number = 0;
};

[[noreturn]] inline void config_error(std::string_view file, int line,
                                      const std::string& message) {
  throw std::runtime_error(std::string(file) + ":" + std::to_string(line) +
                           ": " + message);
}

inline std::vector<ConfigLine> tokenize_config(std::string_view text,
                                               std::string_view file) {
  std::vector<ConfigLine> entries;
  const auto lines = split(text, '\n');
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      config_error(file, static_cast<int>(i + 1), "expected 'key = value'");
    ConfigLine entry;
    entry.key = std::string(trim(line.substr(0, eq)));
    entry.value = std::string(trim(line.substr(eq + 1)));
    entry.line_number = static_cast<int>(i + 1);
    if (entry.key.empty() || entry.value.empty())
      config_error(file, entry.line_number, "empty key or value");
    entries.push_back(std::move(entry));
  }
  return entries;
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(std::string_view text,
                                                std::string_view file) {
  ExperimentConfig config;
  std::map<std::string, ArmConfig> arms;
  std::map<std::string, int> seen;

  for (const auto& entry : detail::tokenize_config(text, file)) {
    if (const auto [it, inserted] = seen.emplace(entry.key, entry.line_number);
        !inserted)
      detail::config_error(file, entry.line_number,
                           "duplicate key '" + entry.key + "' (first on line " +
                               std::to_string(it->second) + ")");
    try {
      if (entry.key == "repetitions")
        config.repetitions = static_cast<int>(parse_u64(entry.value));
      else if (entry.key == "seed")
        config.seed = parse_u64(entry.value);
      else if (entry.key == "max_steps")
        config.max_steps = parse_u64(entry.value);
      else if (entry.key == "base_episodes")
        config.base_episodes = static_cast<int>(parse_u64(entry.value));
      else if (entry.key == "base_episode_steps")
        config.base_episode_steps = static_cast<int>(parse_u64(entry.value));
      else if (entry.key == "design_mu")
        config.design_mu = static_cast<int>(parse_u64(entry.value));
      else if (entry.key == "design_lambda")
        config.design_lambda = static_cast<int>(parse_u64(entry.value));
      else if (entry.key == "size_bias")
        config.size_bias = parse_double(entry.value);
      else if (entry.key == "checkpoints")
        config.checkpoints = static_cast<int>(parse_u64(entry.value));
      else if (entry.key == "bootstrap_resamples")
        config.bootstrap_resamples = static_cast<int>(parse_u64(entry.value));
      else if (entry.key == "confidence")
        config.confidence = parse_double(entry.value);
      else if (entry.key == "control_algorithm") {
        if (entry.value == "cmaes")
          config.control_algorithm = ControlAlgorithm::kCmaes;
        else if (entry.value == "mu_comma_lambda")
          config.control_algorithm = ControlAlgorithm::kMuCommaLambda;
        else
          detail::config_error(file, entry.line_number,
                               "control_algorithm must be cmaes or "
                               "mu_comma_lambda");
      } else if (entry.key.rfind("schedule.", 0) == 0) {
        const auto rest = std::string_view(entry.key).substr(9);
        const auto dot = rest.find('.');
        if (dot == std::string_view::npos || dot == 0 ||
            dot + 1 >= rest.size())
          detail::config_error(file, entry.line_number,
                               "expected schedule.<arm>.<field>");
        const std::string arm_name(rest.substr(0, dot));
        const std::string_view field = rest.substr(dot + 1);
        ArmConfig& arm = arms[arm_name];
        arm.name = arm_name;
        if (field == "kind")
          arm.kind = schedule_from_name(entry.value);
        else if (field == "reduced_quantity")
          arm.reduced_quantity = parse_double(entry.value);
        else if (field == "reduced_length")
          arm.reduced_length = parse_double(entry.value);
        else if (field == "retrain_episodes")
          arm.retrain_episodes = static_cast<int>(parse_u64(entry.value));
        else if (field == "retrain_episode_steps")
          arm.retrain_episode_steps =
              static_cast<int>(parse_u64(entry.value));
        else
          detail::config_error(file, entry.line_number,
                               "unknown arm field '" + std::string(field) +
                                   "'");
      } else {
        detail::config_error(file, entry.line_number,
                             "unknown key '" + entry.key + "'");
      }
    } catch (const std::invalid_argument& error) {
      detail::config_error(file, entry.line_number, error.what());
    }
  }

  if (config.repetitions < 1)
    throw std::runtime_error(std::string(file) + ": repetitions must be >= 1");
  if (arms.empty())
    throw std::runtime_error(std::string(file) +
                             ": at least one schedule arm is required");
  for (auto& [name, arm] : arms) config.arms.push_back(arm);
  std::sort(config.arms.begin(), config.arms.end(),
            [](const ArmConfig& a, const ArmConfig& b) {
              return a.name < b.name;
            });
  return config;
}

inline ExperimentConfig load_experiment_config(
    const std::filesystem::path& path) {
  return parse_experiment_config(read_file(path), path.string());
}

inline std::string serialize_experiment_config(const ExperimentConfig& c) {
  std::string out;
  out += "repetitions = " + std::to_string(c.repetitions) + '\n';
  out += "seed = " + std::to_string(c.seed) + '\n';
  out += "max_steps = " + std::to_string(c.max_steps) + '\n';
  out += "base_episodes = " + std::to_string(c.base_episodes) + '\n';
  out += "base_episode_steps = " + std::to_string(c.base_episode_steps) +
         '\n';
  out += "design_mu = " + std::to_string(c.design_mu) + '\n';
  out += "design_lambda = " + std::to_string(c.design_lambda) + '\n';
  out += "size_bias = " + fmt_double(c.size_bias) + '\n';
  out += "control_algorithm = ";
  out += c.control_algorithm == ControlAlgorithm::kCmaes ? "cmaes"
                                                         : "mu_comma_lambda";
  out += '\n';
  out += "checkpoints = " + std::to_string(c.checkpoints) + '\n';
  out += "bootstrap_resamples = " + std::to_string(c.bootstrap_resamples) +
         '\n';
  out += "confidence = " + fmt_double(c.confidence) + '\n';
  for (const auto& arm : c.arms) {
    const std::string prefix = "schedule." + arm.name + ".";
    out += prefix + "kind = " + std::string(schedule_name(arm.kind)) + '\n';
    out += prefix + "reduced_quantity = " + fmt_double(arm.reduced_quantity) +
           '\n';
    out += prefix + "reduced_length = " + fmt_double(arm.reduced_length) +
           '\n';
    if (arm.retrain_episodes)
      out += prefix + "retrain_episodes = " +
             std::to_string(arm.retrain_episodes) + '\n';
    if (arm.retrain_episode_steps)
      out += prefix + "retrain_episode_steps = " +
             std::to_string(arm.retrain_episode_steps) + '\n';
  }
  return out;
}

// Master seed for repetition `rep` of an arm: config seed + rep + offset.
inline ScheduleConfig schedule_config_for(const ExperimentConfig& exp,
                                          const ArmConfig& arm, int rep,
                                          std::uint64_t seed_offset = 0) {
  ScheduleConfig config;
  config.schedule = arm.kind;
  config.master_seed = exp.seed + static_cast<std::uint64_t>(rep) +
                       seed_offset;
  config.max_steps = exp.max_steps;
  config.reduction.reduced_quantity = arm.reduced_quantity;
  config.reduction.reduced_length = arm.reduced_length;
  config.reduction.base_episodes = exp.base_episodes;
  config.reduction.base_episode_steps = exp.base_episode_steps;
  config.retrain_budget.episodes =
      arm.retrain_episodes ? arm.retrain_episodes : exp.base_episodes;
  config.retrain_budget.episode_steps = arm.retrain_episode_steps
                                            ? arm.retrain_episode_steps
                                            : exp.base_episode_steps;
  config.control_algorithm = exp.control_algorithm;
  config.design_config.mu = exp.design_mu;
  config.design_config.lambda = exp.design_lambda;
  config.design_config.elitist = true;
  config.size_bias = exp.size_bias;
  return config;
}

}  // namespace morphx
