#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "helpers.hpp"
#include "morphx/controller.hpp"

using namespace morphx;
using namespace test_helpers;

namespace {

// Analytic episode landscape: peak objective at a fixed target controller.
struct QuadraticProxy {
  std::vector<double> target;
  int calls = 0;
  std::vector<std::vector<double>> seen;

  EpisodeFn fn() {
    return [this](const ControllerParams& params,
                  int steps) -> std::optional<EpisodeResult> {
      ++calls;
      seen.push_back(params.values);
      double error = 0.0;
      for (std::size_t i = 0; i < params.values.size(); ++i) {
        const double d = params.values[i] - target[i];
        error += d * d;
      }
      return EpisodeResult{-error, static_cast<std::uint64_t>(steps), false};
    };
  }
};

}  // namespace

TEST_CASE("cma training runs whole generations and meters steps exactly") {
  const auto genome = wrap_genome(triangle(true), "00000000000000aa");
  REQUIRE(complexity(genome) == 3);  // lambda = 7, 64 episodes -> 9 generations
  QuadraticProxy proxy{{0.2, 1.0, 0.1}};
  const auto result = train_controller(genome, {64, 100}, RngStream(1),
                                       ControlAlgorithm::kCmaes, proxy.fn());
  REQUIRE(result.episodes_run == 63);
  REQUIRE(proxy.calls == 63);
  REQUIRE(result.steps_used == 63 * 100);
  REQUIRE(result.best_episode_steps == 100);
  REQUIRE_FALSE(result.stopped_early);
  REQUIRE(result.best.values.size() == 3);
}

TEST_CASE("cma training converges on a quadratic landscape") {
  const auto genome = wrap_genome(triangle(true), "00000000000000ab");
  QuadraticProxy proxy{{0.2, 1.0, 0.1}};
  const auto result = train_controller(genome, {256, 50}, RngStream(2),
                                       ControlAlgorithm::kCmaes, proxy.fn());
  REQUIRE(result.objective > -1e-3);
  for (std::size_t i = 0; i < 3; ++i)
    REQUIRE(std::abs(result.best.values[i] - proxy.target[i]) < 0.1);
}

TEST_CASE("budgets below one generation degrade to random search") {
  const auto genome = wrap_genome(triangle(true), "00000000000000ac");
  QuadraticProxy proxy{{0.0, 0.0, 0.0}};
  const auto result = train_controller(genome, {5, 40}, RngStream(3),
                                       ControlAlgorithm::kCmaes, proxy.fn());
  REQUIRE(result.episodes_run == 5);
  REQUIRE(result.steps_used == 5 * 40);
  REQUIRE(proxy.seen.size() == 5);
  for (const auto& values : proxy.seen) {
    REQUIRE(values.size() == 3);
    REQUIRE(std::abs(values[0]) <= kMaxAmplitude);
    REQUIRE(std::abs(values[1]) <= std::numbers::pi);
    REQUIRE(std::abs(values[2]) <= kMaxOffset);
  }
}

TEST_CASE("a zero-dimensional controller costs exactly one episode") {
  const auto genome = wrap_genome(ground_pair(false), "00000000000000ad");
  REQUIRE(complexity(genome) == 0);
  QuadraticProxy proxy{{}};
  const auto result = train_controller(genome, {64, 500}, RngStream(4),
                                       ControlAlgorithm::kCmaes, proxy.fn());
  REQUIRE(result.episodes_run == 1);
  REQUIRE(result.steps_used == 500);
  REQUIRE(result.best.values.empty());
  REQUIRE(result.objective == 0.0);
}

TEST_CASE("a refused episode stops training with exact bookkeeping") {
  const auto genome = wrap_genome(triangle(true), "00000000000000ae");
  int calls = 0;
  const EpisodeFn refusing = [&calls](const ControllerParams&,
                                      int steps) -> std::optional<EpisodeResult> {
    if (++calls > 10) return std::nullopt;
    return EpisodeResult{static_cast<double>(calls),
                         static_cast<std::uint64_t>(steps), false};
  };
  const auto result = train_controller(genome, {64, 100}, RngStream(5),
                                       ControlAlgorithm::kCmaes, refusing);
  REQUIRE(result.stopped_early);
  REQUIRE(result.episodes_run == 10);
  REQUIRE(result.steps_used == 10 * 100);
  REQUIRE(result.objective == 10.0);  // objectives were 1..10
  REQUIRE(calls == 11);               // the refused call is not an episode
}

TEST_CASE("episodes shorter than requested are accounted at actual length") {
  const auto genome = wrap_genome(triangle(true), "00000000000000af");
  int calls = 0;
  const EpisodeFn shrinking = [&calls](const ControllerParams&,
                                       int steps) -> std::optional<EpisodeResult> {
    ++calls;  // episode i consumes steps - i and scores i
    return EpisodeResult{static_cast<double>(calls),
                         static_cast<std::uint64_t>(steps - calls), false};
  };
  const auto result = train_controller(genome, {5, 50}, RngStream(6),
                                       ControlAlgorithm::kCmaes, shrinking);
  REQUIRE(result.episodes_run == 5);
  REQUIRE(result.steps_used == 49 + 48 + 47 + 46 + 45);
  REQUIRE(result.objective == 5.0);
  REQUIRE(result.best_episode_steps == 45);  // episode that scored best
}

TEST_CASE("ties keep the first best controller") {
  const auto genome = wrap_genome(triangle(true), "00000000000000b0");
  QuadraticProxy proxy{{0.0, 0.0, 0.0}};
  const EpisodeFn constant = [&proxy](const ControllerParams& params,
                                      int steps) -> std::optional<EpisodeResult> {
    proxy.seen.push_back(params.values);
    return EpisodeResult{3.5, static_cast<std::uint64_t>(steps), false};
  };
  const auto result = train_controller(genome, {6, 30}, RngStream(7),
                                       ControlAlgorithm::kCmaes, constant);
  REQUIRE(result.objective == 3.5);
  REQUIRE(result.best.values == proxy.seen.front());
}

TEST_CASE("training is deterministic in the stream seed") {
  const auto genome = wrap_genome(triangle(true), "00000000000000b1");
  for (const auto algorithm :
       {ControlAlgorithm::kCmaes, ControlAlgorithm::kMuCommaLambda}) {
    QuadraticProxy a{{0.2, -0.5, 0.0}};
    QuadraticProxy b{{0.2, -0.5, 0.0}};
    const auto ra =
        train_controller(genome, {30, 20}, RngStream(8), algorithm, a.fn());
    const auto rb =
        train_controller(genome, {30, 20}, RngStream(8), algorithm, b.fn());
    REQUIRE(ra.objective == rb.objective);
    REQUIRE(ra.best.values == rb.best.values);
    REQUIRE(ra.steps_used == rb.steps_used);
    REQUIRE(a.seen == b.seen);

    QuadraticProxy c{{0.2, -0.5, 0.0}};
    const auto rc =
        train_controller(genome, {30, 20}, RngStream(9), algorithm, c.fn());
    REQUIRE(a.seen != c.seen);  // different stream, different candidates
  }
}

TEST_CASE("mu-comma-lambda training also optimizes the landscape") {
  const auto genome = wrap_genome(triangle(true), "00000000000000b2");
  QuadraticProxy proxy{{0.2, 1.0, 0.1}};
  const auto result =
      train_controller(genome, {256, 50}, RngStream(10),
                       ControlAlgorithm::kMuCommaLambda, proxy.fn());
  REQUIRE(result.episodes_run == 252);  // 36 generations of 7
  REQUIRE(result.steps_used == 252 * 50);
  REQUIRE(result.objective > -0.5);
  REQUIRE(result.objective <= 0.0);
}

TEST_CASE("invalid budgets are rejected") {
  const auto genome = wrap_genome(triangle(true), "00000000000000b3");
  QuadraticProxy proxy{{0.0, 0.0, 0.0}};
  REQUIRE_THROWS_AS(train_controller(genome, {0, 100}, RngStream(1),
                                     ControlAlgorithm::kCmaes, proxy.fn()),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(train_controller(genome, {10, 0}, RngStream(1),
                                     ControlAlgorithm::kCmaes, proxy.fn()),
                    std::invalid_argument);
}

TEST_CASE("the simulator-backed wrapper trains real episodes") {
  const auto genome = wrap_genome(triangle(true), "00000000000000b4");
  const auto result = train_controller(genome, {6, 40}, RngStream(11));
  REQUIRE(result.episodes_run == 6);
  REQUIRE(result.steps_used == 6 * 40);
  REQUIRE(std::isfinite(result.objective));
  REQUIRE(result.best.values.size() == 3);
}
