/**
 * @file synth.hpp
 * @brief Planted-community hypergraphs for desk-scale experiments.
 *
 * Nodes are split into contiguous, equally sized communities. Features are
 * the one-hot community indicator plus N(0, feature_noise^2). A hyperedge
 * picks a community and a centre node, then draws its members from the
 * centre's 2 * locality + 1 nearest community members in feature space
 * (locality 0 means the whole community). Each member is swapped for a node
 * from another community with probability `noise`.
 */
#pragma once

#include <cstdint>
#include <vector>

#include "ahp/hypergraph.hpp"

namespace ahp {

struct SynthParams {
  std::size_t nodes = 200;
  std::size_t edges = 300;
  std::size_t communities = 10;
  std::size_t locality = 1;
  double noise = 0.05;
  double feature_noise = 0.1;
  SizeDistribution sizes{{{2, 0.3}, {3, 0.4}, {4, 0.2}, {5, 0.1}}};
  std::uint64_t seed = 0;
};

struct SynthData {
  Hypergraph hypergraph;
  FeatureMatrix features;
  std::vector<std::uint32_t> community;  // per node
};

/// Throws InvariantError for infeasible parameters.
SynthData make_planted(const SynthParams& p);

}  // namespace ahp
