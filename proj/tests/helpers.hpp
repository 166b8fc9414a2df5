#pragma once

// Shared builders for tests: tiny hand-made morphologies with known behavior.

#include <vector>

#include "morphx/genome.hpp"
#include "morphx/physics.hpp"

namespace test_helpers {

// Two nodes resting on the ground joined by one horizontal spring.
inline morphx::MorphologyGraph ground_pair(bool actuated = false) {
  morphx::MorphologyGraph graph;
  graph.nodes.push_back({{0.0, 0.0}, 1.0});
  graph.nodes.push_back({{0.8, 0.0}, 1.0});
  graph.edges.push_back({0, 1, 0.8, 200.0, actuated});
  return graph;
}

// Two ground nodes plus an apex, springs at their geometric rest lengths.
inline morphx::MorphologyGraph triangle(bool actuated = false) {
  morphx::MorphologyGraph graph;
  graph.nodes.push_back({{0.0, 0.0}, 1.0});
  graph.nodes.push_back({{1.0, 0.0}, 1.0});
  graph.nodes.push_back({{0.5, 0.7}, 1.0});
  const auto rest = [&](int a, int b) {
    return (graph.nodes[a].pos - graph.nodes[b].pos).norm();
  };
  graph.edges.push_back({0, 1, rest(0, 1), 200.0, actuated});
  graph.edges.push_back({0, 2, rest(0, 2), 200.0, false});
  graph.edges.push_back({1, 2, rest(1, 2), 200.0, false});
  return graph;
}

inline morphx::MorphologyGenome wrap_genome(morphx::MorphologyGraph graph,
                                            const char* id) {
  morphx::MorphologyGenome genome;
  genome.graph = std::move(graph);
  genome.genome_id = id;
  return genome;
}

}  // namespace test_helpers
