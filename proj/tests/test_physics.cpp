#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "helpers.hpp"
#include "morphx/physics.hpp"

using namespace morphx;
using test_helpers::ground_pair;
using test_helpers::triangle;

namespace {

double spring_energy(const MorphologyGraph& graph,
                     const std::vector<Vec2>& pos) {
  double energy = 0.0;
  for (const auto& e : graph.edges) {
    const double len = (pos[e.b] - pos[e.a]).norm();
    energy += 0.5 * e.stiffness * (len - e.rest_length) * (len - e.rest_length);
  }
  return energy;
}

double total_energy(const MorphologyGraph& graph,
                    const std::vector<Vec2>& now,
                    const std::vector<Vec2>& before, double dt) {
  double energy = spring_energy(graph, now);
  for (std::size_t i = 0; i < now.size(); ++i) {
    const Vec2 v = (now[i] - before[i]) * (1.0 / dt);
    energy += 0.5 * graph.nodes[i].mass * (v.x * v.x + v.y * v.y);
    energy += graph.nodes[i].mass * graph.gravity *
              (now[i].y - graph.ground_y);
  }
  return energy;
}

}  // namespace

TEST_CASE("control_dim counts three parameters per actuated edge") {
  auto graph = triangle();
  REQUIRE(control_dim(graph) == 0);
  graph.edges[0].actuated = true;
  REQUIRE(control_dim(graph) == 3);
  graph.edges[2].actuated = true;
  REQUIRE(control_dim(graph) == 6);
}

TEST_CASE("validate_graph rejects malformed graphs") {
  REQUIRE_THROWS_AS(validate_graph(MorphologyGraph{}), std::invalid_argument);

  auto bad_mass = ground_pair();
  bad_mass.nodes[0].mass = 0.0;
  REQUIRE_THROWS_AS(validate_graph(bad_mass), std::invalid_argument);

  auto self_loop = ground_pair();
  self_loop.edges[0].b = 0;
  REQUIRE_THROWS_AS(validate_graph(self_loop), std::invalid_argument);

  auto duplicate = ground_pair();
  duplicate.edges.push_back({1, 0, 0.5, 100.0, false});
  REQUIRE_THROWS_AS(validate_graph(duplicate), std::invalid_argument);

  auto out_of_range = ground_pair();
  out_of_range.edges[0].b = 5;
  REQUIRE_THROWS_AS(validate_graph(out_of_range), std::invalid_argument);

  auto disconnected = ground_pair();
  disconnected.nodes.push_back({{3.0, 0.0}, 1.0});
  REQUIRE_THROWS_AS(validate_graph(disconnected), std::invalid_argument);

  auto below_ground = ground_pair();
  below_ground.nodes[1].pos.y = -0.5;
  REQUIRE_THROWS_AS(validate_graph(below_ground), std::invalid_argument);

  auto bad_rest = ground_pair();
  bad_rest.edges[0].rest_length = 0.0;
  REQUIRE_THROWS_AS(validate_graph(bad_rest), std::invalid_argument);

  auto bad_stiffness = ground_pair();
  bad_stiffness.edges[0].stiffness = -1.0;
  REQUIRE_THROWS_AS(validate_graph(bad_stiffness), std::invalid_argument);

  REQUIRE_NOTHROW(validate_graph(ground_pair()));
  REQUIRE_NOTHROW(validate_graph(triangle()));
}

TEST_CASE("simulate_episode validates its inputs") {
  const auto graph = ground_pair(true);
  const std::vector<double> ok{0.2, 0.0, 0.0};
  const std::vector<double> wrong{0.2, 0.0};
  REQUIRE_THROWS_AS(simulate_episode(graph, wrong, 10),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(simulate_episode(graph, ok, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(simulate_episode(graph, ok, 10, -0.01),
                    std::invalid_argument);
  REQUIRE_NOTHROW(simulate_episode(graph, ok, 10));
}

TEST_CASE("episodes are bitwise deterministic") {
  const auto graph = triangle(true);
  const std::vector<double> controller{0.3, 1.0, 0.1};
  const auto a = simulate_episode(graph, controller, 500);
  const auto b = simulate_episode(graph, controller, 500);
  REQUIRE(std::memcmp(&a.objective, &b.objective, sizeof(double)) == 0);
  REQUIRE(a.steps_consumed == b.steps_consumed);
  REQUIRE(a.steps_consumed == 500);
}

TEST_CASE("a shorter episode is a prefix of a longer one") {
  const auto graph = triangle(true);
  const std::vector<double> controller{0.35, 0.5, -0.05};
  std::vector<std::vector<Vec2>> frames;
  simulate_episode(graph, controller, 300, kDefaultDt,
                   [&](int, const std::vector<Vec2>& positions) {
                     frames.push_back(positions);
                   });
  REQUIRE(frames.size() == 300);

  std::vector<Vec2> last_short;
  simulate_episode(graph, controller, 120, kDefaultDt,
                   [&](int, const std::vector<Vec2>& positions) {
                     last_short = positions;
                   });
  REQUIRE(last_short.size() == frames[119].size());
  for (std::size_t i = 0; i < last_short.size(); ++i) {
    REQUIRE(last_short[i].x == frames[119][i].x);
    REQUIRE(last_short[i].y == frames[119][i].y);
  }
}

TEST_CASE("a resting structure without actuation stays put") {
  const auto graph = ground_pair();
  std::vector<Vec2> last;
  const auto result = simulate_episode(
      graph, {}, 1000, kDefaultDt,
      [&](int, const std::vector<Vec2>& positions) { last = positions; });
  REQUIRE_FALSE(result.diverged);
  REQUIRE(std::abs(result.objective) < 1e-9);
  REQUIRE(std::abs(last[0].x - 0.0) < 1e-9);
  REQUIRE(std::abs(last[1].x - 0.8) < 1e-9);
  REQUIRE(last[0].y == 0.0);
  REQUIRE(last[1].y == 0.0);
}

TEST_CASE("passive dynamics dissipate energy") {
  // Apex sags under gravity; damping and inelastic contact may only remove
  // mechanical energy.
  const auto graph = triangle();
  std::vector<Vec2> previous;
  double first_energy = 0.0;
  double last_energy = 0.0;
  bool have_first = false;
  simulate_episode(graph, {}, 2000, kDefaultDt,
                   [&](int, const std::vector<Vec2>& positions) {
                     if (!previous.empty()) {
                       last_energy = total_energy(graph, positions, previous,
                                                  kDefaultDt);
                       if (!have_first) {
                         first_energy = last_energy;
                         have_first = true;
                       }
                     }
                     previous = positions;
                   });
  REQUIRE(have_first);
  REQUIRE(last_energy <= first_energy + 1e-9);
}

TEST_CASE("nodes never end a step below the ground plane") {
  auto graph = triangle(true);
  for (auto& node : graph.nodes) node.pos.y += 1.5;  // drop from height
  bool violated = false;
  const std::vector<double> controller{0.4, 0.0, 0.2};
  simulate_episode(graph, controller, 1500, kDefaultDt,
                   [&](int, const std::vector<Vec2>& positions) {
                     for (const auto& p : positions)
                       if (p.y < graph.ground_y - 1e-12) violated = true;
                   });
  REQUIRE_FALSE(violated);
}

TEST_CASE("explosive stiffness diverges to a -infinity objective") {
  auto graph = ground_pair();
  graph.edges[0].stiffness = 1e9;  // far beyond stable dt
  graph.nodes[1].pos.x = 2.0;      // heavily stretched start
  const auto result = simulate_episode(graph, {}, 1000);
  REQUIRE(result.diverged);
  REQUIRE(result.objective == -std::numeric_limits<double>::infinity());
  REQUIRE(result.steps_consumed >= 1);
  REQUIRE(result.steps_consumed <= 1000);
}

TEST_CASE("amplitude and offset are clamped to their caps") {
  const auto graph = ground_pair(true);
  const std::vector<double> wild{10.0, 0.7, 5.0};
  const std::vector<double> capped{kMaxAmplitude, 0.7, kMaxOffset};
  const auto a = simulate_episode(graph, wild, 400);
  const auto b = simulate_episode(graph, capped, 400);
  REQUIRE(a.objective == b.objective);
}

TEST_CASE("actuation moves the centre of mass") {
  const auto graph = ground_pair(true);
  const std::vector<double> zeros{0.0, 0.0, 0.0};
  const std::vector<double> pumping{0.4, 0.0, 0.0};
  const auto still = simulate_episode(graph, zeros, 500);
  const auto driven = simulate_episode(graph, pumping, 500);
  REQUIRE_FALSE(driven.diverged);
  REQUIRE(std::abs(driven.objective) > std::abs(still.objective));
}

TEST_CASE("a known walker covers frozen ground in a fixed episode") {
  // Square frame with two anti-phase actuated diagonals; a gait that covers
  // about ten units in five simulated seconds. Regression fixture: a change
  // to integration, actuation, damping or ground contact will move this.
  MorphologyGraph graph;
  graph.nodes = {{{0.0, 0.0}, 1.0},
                 {{0.9, 0.0}, 1.0},
                 {{0.9, 0.8}, 1.0},
                 {{0.0, 0.8}, 1.0}};
  graph.edges = {{0, 1, 0.9, 300.0, false},
                 {1, 2, 0.8, 300.0, false},
                 {2, 3, 0.9, 300.0, false},
                 {0, 3, 0.8, 300.0, false},
                 {0, 2, 1.2041594578792296, 250.0, true},
                 {1, 3, 1.2041594578792296, 250.0, true}};
  const std::vector<double> gait{0.4, -2.4, 0.2, 0.4, 0.8, 0.2};
  const auto result = simulate_episode(graph, gait, 500);
  REQUIRE_FALSE(result.diverged);
  REQUIRE(result.steps_consumed == 500);
  REQUIRE(result.objective > 9.0);
  REQUIRE(result.objective < 11.0);
}
