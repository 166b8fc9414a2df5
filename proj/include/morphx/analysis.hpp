#pragma once

// Statistics over collections of run logs: percentile-bootstrap confidence
// intervals of the mean, best-objective and incumbent-complexity curves on a
// shared log-spaced checkpoint grid, and paired difference curves. Checkpoint
// values before a run's first logged row are NaN and excluded from the
// statistics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "morphx/engine.hpp"
#include "morphx/rng.hpp"

namespace morphx {

struct BootstrapResult {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

// Percentile bootstrap of the mean: resample the sample with replacement,
// take each resample's mean, and report the (1-confidence)/2 quantiles of
// those means (linear interpolation between order statistics).
inline BootstrapResult bootstrap_ci(std::span<const double> sample,
                                    RngStream& rng, double confidence = 0.95,
                                    int resamples = 10000) {
  if (sample.empty())
    throw std::invalid_argument("bootstrap_ci: empty sample");
  if (!(confidence > 0.0 && confidence < 1.0))
    throw std::invalid_argument("bootstrap_ci: confidence outside (0, 1)");
  if (resamples < 1)
    throw std::invalid_argument("bootstrap_ci: resamples must be >= 1");

  const std::size_t n = sample.size();
  double sum = 0.0;
  for (double v : sample) sum += v;
  BootstrapResult out;
  out.mean = sum / static_cast<double>(n);
  if (n == 1) {
    out.lower = out.upper = out.mean;
    return out;
  }

  std::vector<double> means(resamples);
  for (int b = 0; b < resamples; ++b) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += sample[rng.below(n)];
    means[b] = total / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const auto quantile = [&](double q) {
    const double position = q * (resamples - 1);
    const std::size_t lo = static_cast<std::size_t>(position);
    if (lo + 1 >= means.size()) return means.back();
    const double frac = position - static_cast<double>(lo);
    return means[lo] + (means[lo + 1] - means[lo]) * frac;
  };
  const double alpha = (1.0 - confidence) / 2.0;
  out.lower = quantile(alpha);
  out.upper = quantile(1.0 - alpha);
  return out;
}

// Log-spaced checkpoints from `first` to `max_steps` inclusive, deduplicated
// after rounding.
inline std::vector<std::uint64_t> checkpoint_grid(std::uint64_t max_steps,
                                                  int points = 64,
                                                  std::uint64_t first = 1000) {
  if (points < 1) throw std::invalid_argument("checkpoint_grid: points < 1");
  if (max_steps <= first) return {max_steps};
  std::vector<std::uint64_t> grid;
  const double log_first = std::log(static_cast<double>(first));
  const double log_last = std::log(static_cast<double>(max_steps));
  for (int i = 0; i < points; ++i) {
    const double fraction =
        points == 1 ? 1.0 : static_cast<double>(i) / (points - 1);
    const double value =
        std::exp(log_first + fraction * (log_last - log_first));
    std::uint64_t rounded =
        static_cast<std::uint64_t>(std::llround(value));
    if (i == points - 1) rounded = max_steps;
    if (grid.empty() || rounded > grid.back()) grid.push_back(rounded);
  }
  return grid;
}

struct CurveBundle {
  std::vector<std::uint64_t> checkpoints;
  std::vector<std::vector<double>> per_run;  // [run][checkpoint]
  std::vector<double> mean;   // filled by summarize_curve
  std::vector<double> lower;
  std::vector<double> upper;
};

namespace detail {

template <typename RowValue>
std::vector<double> locf_curve(const RunLog& log,
                               const std::vector<std::uint64_t>& checkpoints,
                               RowValue&& row_value, bool running_max) {
  std::vector<double> values(checkpoints.size(),
                             std::numeric_limits<double>::quiet_NaN());
  std::size_t next_row = 0;
  double current = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    while (next_row < log.rows.size() &&
           log.rows[next_row].used_steps <= checkpoints[c]) {
      const auto value = row_value(log.rows[next_row]);
      if (value) {
        if (!running_max || std::isnan(current) || *value > current)
          current = *value;
      }
      ++next_row;
    }
    values[c] = current;
  }
  return values;
}

}  // namespace detail

// Best objective reached by any logged row at or before each checkpoint.
inline CurveBundle best_objective_curve(
    const std::vector<RunLog>& logs,
    const std::vector<std::uint64_t>& checkpoints) {
  CurveBundle bundle;
  bundle.checkpoints = checkpoints;
  for (const auto& log : logs)
    bundle.per_run.push_back(detail::locf_curve(
        log, checkpoints,
        [](const RunLogRow& row) -> std::optional<double> {
          return row.objective;
        },
        true));
  return bundle;
}

// Control dimension of the incumbent (most recent new_best row) at each
// checkpoint.
inline CurveBundle complexity_curve(
    const std::vector<RunLog>& logs,
    const std::vector<std::uint64_t>& checkpoints) {
  CurveBundle bundle;
  bundle.checkpoints = checkpoints;
  for (const auto& log : logs)
    bundle.per_run.push_back(detail::locf_curve(
        log, checkpoints,
        [](const RunLogRow& row) -> std::optional<double> {
          if (row.event != LogEvent::kNewBest) return std::nullopt;
          return static_cast<double>(row.complexity);
        },
        false));
  return bundle;
}

// Bootstraps mean and confidence band at each checkpoint over the runs that
// have data there; checkpoints nobody has reached stay NaN.
inline void summarize_curve(CurveBundle& bundle, RngStream& rng,
                            double confidence = 0.95, int resamples = 10000) {
  const std::size_t width = bundle.checkpoints.size();
  bundle.mean.assign(width, std::numeric_limits<double>::quiet_NaN());
  bundle.lower.assign(width, std::numeric_limits<double>::quiet_NaN());
  bundle.upper.assign(width, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> column;
  for (std::size_t c = 0; c < width; ++c) {
    column.clear();
    for (const auto& run : bundle.per_run)
      if (!std::isnan(run[c])) column.push_back(run[c]);
    if (column.empty()) continue;
    const auto result = bootstrap_ci(column, rng, confidence, resamples);
    bundle.mean[c] = result.mean;
    bundle.lower[c] = result.lower;
    bundle.upper[c] = result.upper;
  }
}

// Paired per-run difference a - b on a shared grid (runs pair by index).
inline CurveBundle difference_curve(const CurveBundle& a,
                                    const CurveBundle& b) {
  if (a.checkpoints != b.checkpoints)
    throw std::invalid_argument("difference_curve: checkpoint grids differ");
  if (a.per_run.size() != b.per_run.size())
    throw std::invalid_argument("difference_curve: run counts differ");
  CurveBundle bundle;
  bundle.checkpoints = a.checkpoints;
  for (std::size_t r = 0; r < a.per_run.size(); ++r) {
    std::vector<double> diff(a.checkpoints.size());
    for (std::size_t c = 0; c < diff.size(); ++c)
      diff[c] = a.per_run[r][c] - b.per_run[r][c];
    bundle.per_run.push_back(std::move(diff));
  }
  return bundle;
}

}  // namespace morphx
