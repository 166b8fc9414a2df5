#pragma once

// Morphology genomes: a simulatable graph plus lineage ids, with the random
// generator, the mutation operators and a text serialization that survives
// round trips bit-exactly. Every mutation applies exactly one operator;
// operators that do not apply to the current genome are redrawn.

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "morphx/physics.hpp"
#include "morphx/rng.hpp"
#include "morphx/text.hpp"

namespace morphx {

inline constexpr int kMinNodes = 1;
inline constexpr int kMaxNodes = 24;
inline constexpr int kMaxEdges = 60;

inline constexpr double kMinNodeSeparation = 0.15;
inline constexpr double kRestLengthMin = 0.05;
inline constexpr double kRestLengthMax = 3.0;
inline constexpr double kStiffnessMin = 20.0;
inline constexpr double kStiffnessMax = 2000.0;
inline constexpr double kNodeMassMin = 0.1;
inline constexpr double kNodeMassMax = 5.0;
// Generation-zero actuation rate is drawn per genome with a right-skewed
// distribution: most bodies are sparsely actuated and densely actuated ones
// are rare, so a larger screened pool sees richer designs.
inline constexpr double kActuationRateLo = 0.25;
inline constexpr double kActuationRateHi = 0.65;

struct MorphologyGenome {
  MorphologyGraph graph;
  std::string genome_id;   // 16 hex digits, unique per creating stream
  std::string parent_id;   // empty for generation-zero genomes
};

// Control dimension of the encoded robot: the number of independently
// tunable actuation parameters.
inline int complexity(const MorphologyGenome& genome) {
  return control_dim(genome.graph);
}

inline void validate_genome(const MorphologyGenome& genome) {
  validate_graph(genome.graph);
  const int n = static_cast<int>(genome.graph.nodes.size());
  if (n < kMinNodes || n > kMaxNodes)
    throw std::invalid_argument("node count " + std::to_string(n) +
                                " outside [" + std::to_string(kMinNodes) +
                                ", " + std::to_string(kMaxNodes) + "]");
  if (static_cast<int>(genome.graph.edges.size()) > kMaxEdges)
    throw std::invalid_argument("edge count exceeds " +
                                std::to_string(kMaxEdges));
  if (genome.genome_id.size() != 16)
    throw std::invalid_argument("genome_id must be 16 hex digits");
}

// Maps a genome id to the RNG key of its controller-training stream.
inline std::uint64_t genome_key(std::string_view genome_id) {
  return parse_u64(genome_id, 16);
}

namespace detail {

inline std::string draw_genome_id(RngStream& rng) {
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(rng.next_u64()));
  return std::string(buffer, 16);
}

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

inline bool well_separated(const MorphologyGraph& graph, Vec2 candidate) {
  for (const auto& node : graph.nodes)
    if (distance(node.pos, candidate) < kMinNodeSeparation) return false;
  return true;
}

// Position near an anchor node, on or above ground, separated from existing
// nodes. The fallback places the node beyond the graph's x-extent, which is
// separated by construction.
inline Vec2 place_node(const MorphologyGraph& graph, Vec2 anchor,
                       RngStream& rng) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double radius = rng.uniform(0.4, 1.0);
    Vec2 candidate{anchor.x + radius * std::cos(angle),
                   anchor.y + radius * std::sin(angle)};
    if (candidate.y < graph.ground_y) candidate.y = graph.ground_y;
    if (well_separated(graph, candidate)) return candidate;
  }
  double max_x = graph.nodes.empty() ? 0.0 : graph.nodes[0].pos.x;
  for (const auto& node : graph.nodes)
    if (node.pos.x > max_x) max_x = node.pos.x;
  return Vec2{max_x + rng.uniform(0.4, 0.6),
              graph.ground_y + rng.uniform(0.0, 0.5)};
}

inline bool adjacent(const MorphologyGraph& graph, int a, int b) {
  for (const auto& e : graph.edges)
    if ((e.a == a && e.b == b) || (e.a == b && e.b == a)) return true;
  return false;
}

// actuation_p applies to generation-zero bodies; edges added by mutation
// arrive passive, so actuation changes travel only through the toggle
// operator and stay under parsimony pressure.
inline SpringEdge make_edge(int a, int b, double rest, RngStream& rng,
                            double actuation_p = 0.0) {
  SpringEdge edge;
  edge.a = a;
  edge.b = b;
  edge.rest_length = rest;
  edge.stiffness = rng.uniform(150.0, 400.0);
  edge.actuated = rng.bernoulli(actuation_p);
  return edge;
}

inline bool connected_without_edge(const MorphologyGraph& graph,
                                   std::size_t skip) {
  const int n = static_cast<int>(graph.nodes.size());
  std::vector<std::vector<int>> adjacency(n);
  for (std::size_t k = 0; k < graph.edges.size(); ++k) {
    if (k == skip) continue;
    adjacency[graph.edges[k].a].push_back(graph.edges[k].b);
    adjacency[graph.edges[k].b].push_back(graph.edges[k].a);
  }
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : adjacency[v])
      if (!seen[w]) {
        seen[w] = 1;
        ++reached;
        stack.push_back(w);
      }
  }
  return reached == n;
}

// Multiplicative log-normal nudge; if the clamp would leave the value
// unchanged (already pinned at a bound), the reciprocal factor is used so the
// child always differs from the parent.
inline double perturb_value(double value, double lo, double hi,
                            RngStream& rng) {
  const double factor = std::exp(0.15 * rng.normal());
  double next = std::min(hi, std::max(lo, value * factor));
  if (next == value) next = std::min(hi, std::max(lo, value / factor));
  return next;
}

}  // namespace detail

// Generation-zero genome. size_bias in [0, 1] scales the expected node count
// from a handful of nodes toward the cap; edges connect each new node to an
// existing one (keeping the graph connected), plus extra short edges added
// with fixed probability.
inline MorphologyGenome random_genome(RngStream& rng, double size_bias) {
  if (!(size_bias >= 0.0 && size_bias <= 1.0))
    throw std::invalid_argument("size_bias must lie in [0, 1]");

  MorphologyGenome genome;
  genome.genome_id = detail::draw_genome_id(rng);
  MorphologyGraph& graph = genome.graph;

  const int target = 2 + static_cast<int>(size_bias * 14.0) +
                     static_cast<int>(rng.below(3));
  const int n = std::min(kMaxNodes, std::max(kMinNodes, target));
  const double rate_u = rng.uniform(0.0, 1.0);
  const double actuation_rate =
      kActuationRateLo + (kActuationRateHi - kActuationRateLo) * rate_u * rate_u;

  graph.nodes.push_back(
      {Vec2{0.0, rng.uniform(0.0, 0.5)}, rng.uniform(0.8, 1.5)});
  for (int i = 1; i < n; ++i) {
    const int anchor = static_cast<int>(rng.below(i));
    const Vec2 pos =
        detail::place_node(graph, graph.nodes[anchor].pos, rng);
    graph.nodes.push_back({pos, rng.uniform(0.8, 1.5)});
    graph.edges.push_back(detail::make_edge(
        anchor, i, detail::distance(pos, graph.nodes[anchor].pos), rng,
        actuation_rate));
  }
  for (int i = 0; i < n && static_cast<int>(graph.edges.size()) < kMaxEdges;
       ++i) {
    for (int j = i + 1;
         j < n && static_cast<int>(graph.edges.size()) < kMaxEdges; ++j) {
      if (detail::adjacent(graph, i, j)) continue;
      const double dist =
          detail::distance(graph.nodes[i].pos, graph.nodes[j].pos);
      if (dist > 1.3) continue;
      if (!rng.bernoulli(0.3)) continue;
      graph.edges.push_back(
          detail::make_edge(i, j, dist, rng, actuation_rate));
    }
  }
  validate_genome(genome);
  return genome;
}

namespace detail {

inline bool op_add_node(MorphologyGraph& graph, RngStream& rng) {
  if (static_cast<int>(graph.nodes.size()) >= kMaxNodes ||
      static_cast<int>(graph.edges.size()) >= kMaxEdges)
    return false;
  const int anchor = static_cast<int>(rng.below(graph.nodes.size()));
  const Vec2 pos = place_node(graph, graph.nodes[anchor].pos, rng);
  graph.nodes.push_back({pos, rng.uniform(0.8, 1.5)});
  graph.edges.push_back(
      make_edge(anchor, static_cast<int>(graph.nodes.size()) - 1,
                distance(pos, graph.nodes[anchor].pos), rng));
  return true;
}

inline bool op_remove_leaf(MorphologyGraph& graph, RngStream& rng) {
  std::vector<int> degree(graph.nodes.size(), 0);
  for (const auto& e : graph.edges) {
    ++degree[e.a];
    ++degree[e.b];
  }
  std::vector<int> leaves;
  for (std::size_t i = 0; i < degree.size(); ++i)
    if (degree[i] == 1) leaves.push_back(static_cast<int>(i));
  if (leaves.empty()) return false;
  const int victim = leaves[rng.below(leaves.size())];
  std::vector<SpringEdge> kept;
  for (const auto& e : graph.edges) {
    if (e.a == victim || e.b == victim) continue;
    SpringEdge copy = e;
    if (copy.a > victim) --copy.a;
    if (copy.b > victim) --copy.b;
    kept.push_back(copy);
  }
  graph.edges = std::move(kept);
  graph.nodes.erase(graph.nodes.begin() + victim);
  return true;
}

inline bool op_add_edge(MorphologyGraph& graph, RngStream& rng) {
  if (static_cast<int>(graph.edges.size()) >= kMaxEdges) return false;
  std::vector<std::pair<int, int>> candidates;
  const int n = static_cast<int>(graph.nodes.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (!adjacent(graph, i, j)) candidates.emplace_back(i, j);
  if (candidates.empty()) return false;
  const auto [a, b] = candidates[rng.below(candidates.size())];
  graph.edges.push_back(
      make_edge(a, b, distance(graph.nodes[a].pos, graph.nodes[b].pos), rng));
  return true;
}

inline bool op_remove_edge(MorphologyGraph& graph, RngStream& rng) {
  std::vector<std::size_t> removable;
  for (std::size_t k = 0; k < graph.edges.size(); ++k)
    if (connected_without_edge(graph, k)) removable.push_back(k);
  if (removable.empty()) return false;
  const std::size_t victim = removable[rng.below(removable.size())];
  graph.edges.erase(graph.edges.begin() + victim);
  return true;
}

// Leans toward de-actuation (parsimony pressure): every actuator adds three
// control dimensions, and without a brake the selection walk inflates the
// control space faster than training budgets grow.
inline bool op_toggle_actuation(MorphologyGraph& graph, RngStream& rng) {
  if (graph.edges.empty()) return false;
  std::vector<std::size_t> on;
  std::vector<std::size_t> off;
  for (std::size_t k = 0; k < graph.edges.size(); ++k)
    (graph.edges[k].actuated ? on : off).push_back(k);
  const bool turn_on =
      off.empty() ? false : (on.empty() ? true : rng.bernoulli(0.20));
  const auto& pool = turn_on ? off : on;
  auto& edge = graph.edges[pool[rng.below(pool.size())]];
  edge.actuated = !edge.actuated;
  return true;
}

// Parametric operator; falls back to node mass for edge-less genomes so that
// every valid genome has at least one applicable operator.
inline bool op_perturb(MorphologyGraph& graph, RngStream& rng) {
  if (!graph.edges.empty()) {
    auto& edge = graph.edges[rng.below(graph.edges.size())];
    if (rng.bernoulli(0.5))
      edge.rest_length =
          perturb_value(edge.rest_length, kRestLengthMin, kRestLengthMax, rng);
    else
      edge.stiffness =
          perturb_value(edge.stiffness, kStiffnessMin, kStiffnessMax, rng);
  } else {
    auto& node = graph.nodes[rng.below(graph.nodes.size())];
    node.mass = perturb_value(node.mass, kNodeMassMin, kNodeMassMax, rng);
  }
  return true;
}

}  // namespace detail

// One applied operator per call: 60% structural (add node, remove leaf, add
// edge, remove non-bridging edge, toggle actuation, drawn uniformly), 40%
// parametric perturbation. The child's id is drawn before the operator loop
// so rejected draws do not shift lineage ids.
inline MorphologyGenome mutate(const MorphologyGenome& parent,
                               RngStream& rng) {
  validate_genome(parent);
  MorphologyGenome child;
  child.genome_id = detail::draw_genome_id(rng);
  child.parent_id = parent.genome_id;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    child.graph = parent.graph;
    bool applied = false;
    if (rng.uniform() < 0.6) {
      switch (rng.below(5)) {
        case 0: applied = detail::op_add_node(child.graph, rng); break;
        case 1: applied = detail::op_remove_leaf(child.graph, rng); break;
        case 2: applied = detail::op_add_edge(child.graph, rng); break;
        case 3: applied = detail::op_remove_edge(child.graph, rng); break;
        case 4: applied = detail::op_toggle_actuation(child.graph, rng); break;
      }
    } else {
      applied = detail::op_perturb(child.graph, rng);
    }
    if (applied) {
      validate_genome(child);
      return child;
    }
  }
  throw std::logic_error("no mutation operator applicable");
}

// Single line, comma-free; safe to embed in a CSV payload column. Numbers use
// shortest round-trip formatting, so parse(serialize(g)) reproduces g exactly.
inline std::string serialize_genome(const MorphologyGenome& genome) {
  std::string out = "v1;id=";
  out += genome.genome_id;
  out += ";parent=";
  out += genome.parent_id.empty() ? "none" : genome.parent_id;
  out += ";gravity=" + fmt_double(genome.graph.gravity);
  out += ";ground=" + fmt_double(genome.graph.ground_y);
  out += ";nodes=";
  for (std::size_t i = 0; i < genome.graph.nodes.size(); ++i) {
    const auto& node = genome.graph.nodes[i];
    if (i) out += '/';
    out += fmt_double(node.pos.x) + ':' + fmt_double(node.pos.y) + ':' +
           fmt_double(node.mass);
  }
  out += ";edges=";
  for (std::size_t k = 0; k < genome.graph.edges.size(); ++k) {
    const auto& edge = genome.graph.edges[k];
    if (k) out += '/';
    out += std::to_string(edge.a) + ':' + std::to_string(edge.b) + ':' +
           fmt_double(edge.rest_length) + ':' + fmt_double(edge.stiffness) +
           ':' + (edge.actuated ? '1' : '0');
  }
  return out;
}

inline MorphologyGenome parse_genome(std::string_view text) {
  const auto fields = split(text, ';');
  if (fields.size() != 7 || fields[0] != "v1")
    throw std::invalid_argument("genome text: expected 7 'v1;...' fields");
  auto expect = [](std::string_view field,
                   std::string_view key) -> std::string_view {
    if (field.substr(0, key.size()) != key)
      throw std::invalid_argument("genome text: expected '" +
                                  std::string(key) + "'");
    return field.substr(key.size());
  };
  MorphologyGenome genome;
  genome.genome_id = std::string(expect(fields[1], "id="));
  const auto parent = expect(fields[2], "parent=");
  genome.parent_id = parent == "none" ? "" : std::string(parent);
  genome.graph.gravity = parse_double(expect(fields[3], "gravity="));
  genome.graph.ground_y = parse_double(expect(fields[4], "ground="));
  for (const auto item : split(expect(fields[5], "nodes="), '/')) {
    if (item.empty()) continue;
    const auto parts = split(item, ':');
    if (parts.size() != 3)
      throw std::invalid_argument("genome text: node needs x:y:mass");
    MassNode node;
    node.pos.x = parse_double(parts[0]);
    node.pos.y = parse_double(parts[1]);
    node.mass = parse_double(parts[2]);
    genome.graph.nodes.push_back(node);
  }
  const auto edge_text = expect(fields[6], "edges=");
  if (!edge_text.empty()) {
    for (const auto item : split(edge_text, '/')) {
      const auto parts = split(item, ':');
      if (parts.size() != 5)
        throw std::invalid_argument("genome text: edge needs a:b:rest:k:act");
      SpringEdge edge;
      edge.a = static_cast<int>(parse_u64(parts[0]));
      edge.b = static_cast<int>(parse_u64(parts[1]));
      edge.rest_length = parse_double(parts[2]);
      edge.stiffness = parse_double(parts[3]);
      if (parts[4] == "1")
        edge.actuated = true;
      else if (parts[4] == "0")
        edge.actuated = false;
      else
        throw std::invalid_argument("genome text: actuation flag must be 0/1");
      genome.graph.edges.push_back(edge);
    }
  }
  validate_genome(genome);
  return genome;
}

}  // namespace morphx
