#pragma once

// Black-box maximizers. cma_ask/cma_tell implement CMA-ES with rank-based
// positive recombination weights, cumulative step-size adaptation and
// rank-one plus rank-mu covariance updates; es_step is a generic
// (mu,lambda)/(mu+lambda) evolution-strategy step usable for any individual
// type. Fitness is maximized; -infinity marks a failed evaluation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "morphx/rng.hpp"

namespace morphx {

inline constexpr double kEigenvalueFloor = 1e-14;

inline int cma_default_lambda(int dim) {
  return 4 + static_cast<int>(3.0 * std::log(static_cast<double>(dim)));
}

struct CmaDiagnostics {
  long eigen_floor_repairs = 0;  // non-PD covariance repaired in ask
  long sigma_escapes = 0;        // generations where every candidate failed
};

struct CmaState {
  Eigen::VectorXd mean;
  double sigma = 0.0;
  Eigen::MatrixXd covariance;
  Eigen::VectorXd path_sigma;
  Eigen::VectorXd path_cov;
  long generation = 0;

  // Derived constants, fixed at init.
  int dim = 0;
  int lambda = 0;
  int mu = 0;
  std::vector<double> weights;
  double mu_eff = 0.0;
  double c_sigma = 0.0;
  double d_sigma = 0.0;
  double c_cov_path = 0.0;
  double c_rank_one = 0.0;
  double c_rank_mu = 0.0;
  double chi_n = 0.0;

  mutable CmaDiagnostics diagnostics;
};

inline CmaState cma_init(int dim, double sigma0,
                         const Eigen::VectorXd& mean0 = Eigen::VectorXd(),
                         int lambda = 0) {
  if (dim < 1) throw std::invalid_argument("cma_init: dim must be >= 1");
  if (!(sigma0 > 0.0)) throw std::invalid_argument("cma_init: sigma0 <= 0");
  CmaState s;
  s.dim = dim;
  s.mean = mean0.size() == 0 ? Eigen::VectorXd::Zero(dim) : mean0;
  if (s.mean.size() != dim)
    throw std::invalid_argument("cma_init: mean0 has wrong dimension");
  s.sigma = sigma0;
  s.covariance = Eigen::MatrixXd::Identity(dim, dim);
  s.path_sigma = Eigen::VectorXd::Zero(dim);
  s.path_cov = Eigen::VectorXd::Zero(dim);

  s.lambda = lambda > 0 ? lambda : cma_default_lambda(dim);
  if (s.lambda < 2) throw std::invalid_argument("cma_init: lambda must be >= 2");
  s.mu = s.lambda / 2;
  s.weights.resize(s.mu);
  double sum = 0.0;
  for (int i = 0; i < s.mu; ++i) {
    s.weights[i] = std::log((s.lambda + 1) / 2.0) - std::log(i + 1.0);
    sum += s.weights[i];
  }
  double sum_sq = 0.0;
  for (auto& w : s.weights) {
    w /= sum;
    sum_sq += w * w;
  }
  s.mu_eff = 1.0 / sum_sq;

  const double n = dim;
  s.c_sigma = (s.mu_eff + 2.0) / (n + s.mu_eff + 5.0);
  s.d_sigma = 1.0 +
              2.0 * std::max(0.0, std::sqrt((s.mu_eff - 1.0) / (n + 1.0)) -
                                      1.0) +
              s.c_sigma;
  s.c_cov_path = (4.0 + s.mu_eff / n) / (n + 4.0 + 2.0 * s.mu_eff / n);
  s.c_rank_one = 2.0 / ((n + 1.3) * (n + 1.3) + s.mu_eff);
  s.c_rank_mu =
      std::min(1.0 - s.c_rank_one,
               2.0 * (s.mu_eff - 2.0 + 1.0 / s.mu_eff) /
                   ((n + 2.0) * (n + 2.0) + s.mu_eff));
  s.chi_n = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
  return s;
}

namespace detail {

struct CovarianceFactors {
  Eigen::MatrixXd basis;          // eigenvectors, columns
  Eigen::VectorXd scale;          // sqrt of floored eigenvalues
  bool repaired = false;
};

inline CovarianceFactors factorize(const Eigen::MatrixXd& covariance) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(covariance);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("covariance eigendecomposition failed");
  CovarianceFactors f;
  f.basis = solver.eigenvectors();
  Eigen::VectorXd values = solver.eigenvalues();
  f.scale.resize(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    double v = values[i];
    if (v < kEigenvalueFloor) {
      v = kEigenvalueFloor;
      f.repaired = true;
    }
    f.scale[i] = std::sqrt(v);
  }
  return f;
}

// Indices sorted by fitness descending; stable, so ties keep candidate order.
inline std::vector<int> rank_desc(const std::vector<double>& fitness) {
  std::vector<int> order(fitness.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return fitness[a] > fitness[b]; });
  return order;
}

}  // namespace detail

// Draws lambda candidates from the current search distribution. Leaves the
// state unchanged apart from diagnostics: a covariance that lost positive
// definiteness is sampled from its floored eigenvalue repair and flagged.
inline std::vector<Eigen::VectorXd> cma_ask(const CmaState& state,
                                            RngStream& rng) {
  const auto factors = detail::factorize(state.covariance);
  if (factors.repaired) ++state.diagnostics.eigen_floor_repairs;
  std::vector<Eigen::VectorXd> candidates;
  candidates.reserve(state.lambda);
  Eigen::VectorXd z(state.dim);
  for (int k = 0; k < state.lambda; ++k) {
    for (int i = 0; i < state.dim; ++i) z[i] = rng.normal();
    candidates.push_back(state.mean +
                         state.sigma *
                             (factors.basis *
                              (factors.scale.asDiagonal() * z)));
  }
  return candidates;
}

// Consumes one evaluated generation and returns the updated state. Two guard
// rails keep degenerate generations sane: if every candidate failed, only the
// step size grows (doubled, flagged in diagnostics); if all fitnesses are
// equal there is no information, so nothing but the generation counter moves.
inline CmaState cma_tell(const CmaState& state,
                         const std::vector<Eigen::VectorXd>& candidates,
                         const std::vector<double>& fitness) {
  if (static_cast<int>(candidates.size()) != state.lambda ||
      static_cast<int>(fitness.size()) != state.lambda)
    throw std::invalid_argument("cma_tell: expected lambda candidates");
  for (double f : fitness)
    if (std::isnan(f)) throw std::invalid_argument("cma_tell: NaN fitness");

  CmaState next = state;
  ++next.generation;

  const double neg_inf = -std::numeric_limits<double>::infinity();
  bool any_finite = false;
  bool all_equal = true;
  for (int i = 0; i < state.lambda; ++i) {
    if (fitness[i] != neg_inf) any_finite = true;
    if (fitness[i] != fitness[0]) all_equal = false;
  }
  if (!any_finite) {
    next.sigma = state.sigma * 2.0;
    ++next.diagnostics.sigma_escapes;
    return next;
  }
  if (all_equal) return next;

  const auto order = detail::rank_desc(fitness);
  int selected = 0;
  while (selected < state.mu && fitness[order[selected]] != neg_inf)
    ++selected;
  std::vector<double> weights(state.weights.begin(),
                              state.weights.begin() + selected);
  if (selected < state.mu) {
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (auto& w : weights) w /= sum;
  }

  const int dim = state.dim;
  std::vector<Eigen::VectorXd> steps(selected);
  for (int i = 0; i < selected; ++i)
    steps[i] = (candidates[order[i]] - state.mean) / state.sigma;

  Eigen::VectorXd mean_step = Eigen::VectorXd::Zero(dim);
  for (int i = 0; i < selected; ++i) mean_step += weights[i] * steps[i];

  next.mean = state.mean + state.sigma * mean_step;

  const auto factors = detail::factorize(state.covariance);
  Eigen::VectorXd whitened =
      factors.basis *
      (factors.scale.cwiseInverse().asDiagonal() *
       (factors.basis.transpose() * mean_step));

  const double cs = state.c_sigma;
  next.path_sigma = (1.0 - cs) * state.path_sigma +
                    std::sqrt(cs * (2.0 - cs) * state.mu_eff) * whitened;

  const double path_norm = next.path_sigma.norm();
  const double expected_decay =
      std::sqrt(1.0 - std::pow(1.0 - cs, 2.0 * next.generation));
  const bool h_sigma = path_norm / expected_decay <
                       (1.4 + 2.0 / (dim + 1.0)) * state.chi_n;

  const double cc = state.c_cov_path;
  next.path_cov = (1.0 - cc) * state.path_cov;
  if (h_sigma)
    next.path_cov += std::sqrt(cc * (2.0 - cc) * state.mu_eff) * mean_step;

  const double c1 = state.c_rank_one;
  const double cmu = state.c_rank_mu;
  const double rank_one_deficit = h_sigma ? 0.0 : cc * (2.0 - cc);
  Eigen::MatrixXd cov =
      (1.0 - c1 - cmu + c1 * rank_one_deficit) * state.covariance;
  cov += c1 * (next.path_cov * next.path_cov.transpose());
  for (int i = 0; i < selected; ++i)
    cov += cmu * weights[i] * (steps[i] * steps[i].transpose());
  next.covariance = 0.5 * (cov + cov.transpose());  // keep exactly symmetric

  next.sigma = state.sigma *
               std::exp((cs / state.d_sigma) * (path_norm / state.chi_n - 1.0));
  if (!(next.sigma > 0.0) || !std::isfinite(next.sigma))
    throw std::runtime_error("cma_tell: step size left (0, inf)");
  return next;
}

struct EsConfig {
  int mu = 8;
  int lambda = 16;
  bool elitist = true;  // true: (mu+lambda) survival, false: (mu,lambda)
};

// One evolution-strategy generation. Survivors are the best mu individuals
// under stable descending fitness order (ties resolved by population index);
// children are mutated from survivors round-robin. Elitist steps return the
// survivors followed by lambda children; comma steps return children only.
template <typename Individual, typename MutateFn>
std::vector<Individual> es_step(const std::vector<Individual>& population,
                                const std::vector<double>& fitness,
                                const EsConfig& config, MutateFn&& mutate_fn,
                                RngStream& rng) {
  if (population.empty() || population.size() != fitness.size())
    throw std::invalid_argument("es_step: population/fitness size mismatch");
  if (config.mu < 1 || config.lambda < 1)
    throw std::invalid_argument("es_step: mu and lambda must be >= 1");
  const auto order = detail::rank_desc(fitness);
  const int survivors =
      std::min<int>(config.mu, static_cast<int>(population.size()));
  std::vector<Individual> next;
  next.reserve((config.elitist ? survivors : 0) + config.lambda);
  if (config.elitist)
    for (int i = 0; i < survivors; ++i) next.push_back(population[order[i]]);
  for (int i = 0; i < config.lambda; ++i)
    next.push_back(mutate_fn(population[order[i % survivors]], rng));
  return next;
}

}  // namespace morphx
