#pragma once

// Global step accounting. Every simulator step consumed anywhere in a run is
// charged to one ledger, split into reporting categories; the experiment's
// x-axis is ledger.used_steps(). Budget reductions scale a base training
// budget per design (fewer episodes, or shorter ones).

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "morphx/controller.hpp"

namespace morphx {

enum class StepCategory { kPhase1, kRetrain };

class BudgetLedger {
 public:
  explicit BudgetLedger(std::uint64_t max_steps) : max_steps_(max_steps) {
    if (max_steps < 1)
      throw std::invalid_argument("ledger needs a positive step budget");
  }

  std::uint64_t max_steps() const { return max_steps_; }
  std::uint64_t used_steps() const { return phase1_ + retrain_; }
  std::uint64_t phase1_steps() const { return phase1_; }
  std::uint64_t retrain_steps() const { return retrain_; }
  std::uint64_t remaining() const { return max_steps_ - used_steps(); }
  bool exhausted() const { return used_steps() >= max_steps_; }

  // Charges up to `steps`, truncating at the cap, and returns the amount
  // actually charged. A short grant flips exhausted(); once exhausted,
  // further charges are zero.
  std::uint64_t charge(std::uint64_t steps, StepCategory category) {
    const std::uint64_t granted = steps < remaining() ? steps : remaining();
    (category == StepCategory::kPhase1 ? phase1_ : retrain_) += granted;
    return granted;
  }

 private:
  std::uint64_t max_steps_;
  std::uint64_t phase1_ = 0;
  std::uint64_t retrain_ = 0;
};

struct ReductionConfig {
  double reduced_quantity = 1.0;  // fraction of base episodes, in (0, 1]
  double reduced_length = 1.0;    // fraction of base episode length, in (0, 1]
  int base_episodes = 64;
  int base_episode_steps = 500;
};

inline void validate_reduction(const ReductionConfig& r) {
  if (!(r.reduced_quantity > 0.0 && r.reduced_quantity <= 1.0))
    throw std::invalid_argument("reduced_quantity must lie in (0, 1]");
  if (!(r.reduced_length > 0.0 && r.reduced_length <= 1.0))
    throw std::invalid_argument("reduced_length must lie in (0, 1]");
  if (r.base_episodes < 1 || r.base_episode_steps < 1)
    throw std::invalid_argument("base budget fields must be >= 1");
}

// Scales the base budget, rounding half up and never below one episode or
// one step.
inline TrainingBudget effective_budget(const ReductionConfig& r) {
  validate_reduction(r);
  TrainingBudget b;
  b.episodes = std::max(
      1, static_cast<int>(std::floor(r.reduced_quantity * r.base_episodes +
                                     0.5)));
  b.episode_steps = std::max(
      1, static_cast<int>(std::floor(r.reduced_length * r.base_episode_steps +
                                     0.5)));
  return b;
}

}  // namespace morphx
