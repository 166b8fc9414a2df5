#pragma once

// 2D mass-spring locomotion simulator. Robots are point masses connected by
// damped springs over a flat ground plane; actuated springs oscillate their
// rest length. The objective of an episode is the x-displacement of the
// mass-weighted centre of mass.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace morphx {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  Vec2& operator-=(Vec2 o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  double norm() const { return std::hypot(x, y); }
};

struct MassNode {
  Vec2 pos;
  double mass = 1.0;
};

struct SpringEdge {
  int a = 0;
  int b = 0;
  double rest_length = 1.0;
  double stiffness = 100.0;
  bool actuated = false;
};

struct MorphologyGraph {
  std::vector<MassNode> nodes;
  std::vector<SpringEdge> edges;
  double gravity = 9.81;   // magnitude, pulls toward -y
  double ground_y = 0.0;
};

inline constexpr double kDefaultDt = 0.01;        // seconds per step
inline constexpr double kOscillatorHz = 1.0;      // actuation frequency
inline constexpr double kMaxAmplitude = 0.4;      // |a| cap, fraction of rest
inline constexpr double kMaxOffset = 0.2;         // |o| cap, fraction of rest
inline constexpr double kSpringDamping = 1.5;     // axial damping coefficient
inline constexpr double kTangentialRetention = 0.2;  // 1 - ground friction
inline constexpr double kDivergenceLimit = 1e6;
inline constexpr int kParamsPerActuator = 3;      // amplitude, phase, offset

inline constexpr double kDivergedObjective =
    -std::numeric_limits<double>::infinity();

// Parameters per actuated edge, in edge order: amplitude, phase, offset.
inline int control_dim(const MorphologyGraph& graph) {
  int actuated = 0;
  for (const auto& e : graph.edges) actuated += e.actuated ? 1 : 0;
  return actuated * kParamsPerActuator;
}

// Throws std::invalid_argument describing the first violated constraint.
// Valid graphs have at least one node, positive masses and spring constants,
// in-range distinct endpoints, no duplicate edges, a single connected
// component, and every node on or above the ground plane.
inline void validate_graph(const MorphologyGraph& graph) {
  const int n = static_cast<int>(graph.nodes.size());
  if (n < 1) throw std::invalid_argument("graph has no nodes");
  if (!(graph.gravity >= 0.0) || !std::isfinite(graph.gravity))
    throw std::invalid_argument("gravity must be finite and non-negative");
  if (!std::isfinite(graph.ground_y))
    throw std::invalid_argument("ground_y must be finite");
  for (int i = 0; i < n; ++i) {
    const auto& node = graph.nodes[i];
    if (!(node.mass > 0.0) || !std::isfinite(node.mass))
      throw std::invalid_argument("node " + std::to_string(i) +
                                  " has non-positive mass");
    if (!std::isfinite(node.pos.x) || !std::isfinite(node.pos.y))
      throw std::invalid_argument("node " + std::to_string(i) +
                                  " has non-finite position");
    if (node.pos.y < graph.ground_y - 1e-12)
      throw std::invalid_argument("node " + std::to_string(i) +
                                  " starts below ground");
  }
  std::vector<std::vector<int>> adjacency(n);
  for (std::size_t k = 0; k < graph.edges.size(); ++k) {
    const auto& e = graph.edges[k];
    if (e.a < 0 || e.a >= n || e.b < 0 || e.b >= n)
      throw std::invalid_argument("edge " + std::to_string(k) +
                                  " has out-of-range endpoint");
    if (e.a == e.b)
      throw std::invalid_argument("edge " + std::to_string(k) +
                                  " is a self-loop");
    if (!(e.rest_length > 0.0) || !std::isfinite(e.rest_length))
      throw std::invalid_argument("edge " + std::to_string(k) +
                                  " has non-positive rest length");
    if (!(e.stiffness > 0.0) || !std::isfinite(e.stiffness))
      throw std::invalid_argument("edge " + std::to_string(k) +
                                  " has non-positive stiffness");
    for (int other : adjacency[e.a])
      if (other == e.b)
        throw std::invalid_argument("edge " + std::to_string(k) +
                                    " duplicates an existing edge");
    adjacency[e.a].push_back(e.b);
    adjacency[e.b].push_back(e.a);
  }
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : adjacency[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++reached;
        stack.push_back(w);
      }
    }
  }
  if (reached != n) throw std::invalid_argument("graph is not connected");
}

struct EpisodeResult {
  double objective = 0.0;
  std::uint64_t steps_consumed = 0;
  bool diverged = false;
};

// Called after every executed step with the post-step node positions.
using StepObserver =
    std::function<void(int step_index, const std::vector<Vec2>& positions)>;

namespace detail {

inline double clamp(double v, double lo, double hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

inline double com_x(const MorphologyGraph& graph,
                    const std::vector<Vec2>& positions) {
  double weighted = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    weighted += positions[i].x * graph.nodes[i].mass;
    total += graph.nodes[i].mass;
  }
  return weighted / total;
}

}  // namespace detail

// Runs one episode under position-Verlet integration. The controller vector
// holds (amplitude, phase, offset) per actuated edge, in edge order; its size
// must equal control_dim(graph). Amplitude and offset are clamped to their
// caps before use. Each step applies spring, gravity and damping forces, one
// ground projection pass (inelastic, with tangential friction), then a
// divergence check; a diverged episode scores -infinity and reports the steps
// actually executed.
inline EpisodeResult simulate_episode(const MorphologyGraph& graph,
                                      std::span<const double> controller,
                                      int episode_steps,
                                      double dt = kDefaultDt,
                                      const StepObserver& observer = {}) {
  validate_graph(graph);
  if (static_cast<int>(controller.size()) != control_dim(graph))
    throw std::invalid_argument("controller size " +
                                std::to_string(controller.size()) +
                                " does not match control dimension " +
                                std::to_string(control_dim(graph)));
  if (episode_steps < 1)
    throw std::invalid_argument("episode_steps must be >= 1");
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("dt must be positive");

  const int n = static_cast<int>(graph.nodes.size());
  std::vector<Vec2> pos(n);
  for (int i = 0; i < n; ++i) pos[i] = graph.nodes[i].pos;
  std::vector<Vec2> prev = pos;
  std::vector<Vec2> force(n);

  const double initial_com = detail::com_x(graph, pos);

  EpisodeResult result;
  for (int step = 0; step < episode_steps; ++step) {
    for (auto& f : force) f = Vec2{};
    for (int i = 0; i < n; ++i)
      force[i].y -= graph.gravity * graph.nodes[i].mass;

    int actuator = 0;
    const double t_seconds = step * dt;
    for (const auto& e : graph.edges) {
      double rest = e.rest_length;
      if (e.actuated) {
        const double amplitude = detail::clamp(
            controller[actuator * kParamsPerActuator], -kMaxAmplitude,
            kMaxAmplitude);
        const double phase = controller[actuator * kParamsPerActuator + 1];
        const double offset = detail::clamp(
            controller[actuator * kParamsPerActuator + 2], -kMaxOffset,
            kMaxOffset);
        rest *= 1.0 + amplitude * std::sin(2.0 * std::numbers::pi *
                                               kOscillatorHz * t_seconds +
                                           phase) + offset;
        ++actuator;
      }
      const Vec2 delta = pos[e.b] - pos[e.a];
      const double length = delta.norm();
      if (length < 1e-12) continue;  // coincident endpoints exert no force
      const Vec2 axis = delta * (1.0 / length);
      const Vec2 vel_a = (pos[e.a] - prev[e.a]) * (1.0 / dt);
      const Vec2 vel_b = (pos[e.b] - prev[e.b]) * (1.0 / dt);
      const double axial_speed = (vel_b.x - vel_a.x) * axis.x +
                                 (vel_b.y - vel_a.y) * axis.y;
      const double magnitude =
          e.stiffness * (length - rest) + kSpringDamping * axial_speed;
      force[e.a] += axis * magnitude;
      force[e.b] -= axis * magnitude;
    }

    bool bad = false;
    for (int i = 0; i < n; ++i) {
      const double inv_mass = 1.0 / graph.nodes[i].mass;
      Vec2 next = pos[i] + (pos[i] - prev[i]) +
                  force[i] * (inv_mass * dt * dt);
      Vec2 previous = pos[i];
      if (next.y < graph.ground_y) {
        // Inelastic projection: zero normal velocity, scale tangential.
        const double vx = next.x - previous.x;
        next.y = graph.ground_y;
        previous.y = next.y;
        previous.x = next.x - vx * kTangentialRetention;
      }
      prev[i] = previous;
      pos[i] = next;
      if (!std::isfinite(next.x) || !std::isfinite(next.y) ||
          std::abs(next.x) > kDivergenceLimit ||
          std::abs(next.y) > kDivergenceLimit)
        bad = true;
    }

    ++result.steps_consumed;
    if (bad) {
      result.diverged = true;
      result.objective = kDivergedObjective;
      return result;
    }
    if (observer) observer(step, pos);
  }

  result.objective = detail::com_x(graph, pos) - initial_com;
  return result;
}

}  // namespace morphx
