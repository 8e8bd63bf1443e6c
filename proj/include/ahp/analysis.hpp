/**
 * @file analysis.hpp
 * @brief Hypergraph measures (node degree, pair overlap, intersection size)
 *        and their comparison between an original and a sampled hypergraph.
 *
 * Pair overlaps and intersection sizes only list pairs with a nonzero value.
 */
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ahp/hypergraph.hpp"

namespace ahp {

struct MeasureDistributions {
  std::vector<std::uint32_t> node_degrees;        // one per node, isolated nodes give 0
  std::vector<std::uint32_t> pair_overlaps;       // node pairs sharing >= 1 hyperedge
  std::vector<std::uint32_t> intersection_sizes;  // hyperedge pairs sharing >= 1 node
};

namespace serial {
MeasureDistributions measure(const Hypergraph& h);
}

/// OpenMP over nodes (overlaps) and hyperedges (intersections); the output
/// order is the serial order regardless of thread count.
MeasureDistributions measure(const Hypergraph& h);

/// Indices of the ceil(n/6) hyperedges sampled_hypergraph replaces, ascending.
std::vector<std::size_t> replacement_indices(std::size_t num_edges, std::uint64_t seed);

/// h with a uniformly chosen sixth of its hyperedges replaced by `negatives`
/// (in order of ascending replaced index).
Hypergraph sampled_hypergraph(const Hypergraph& h, std::span<const NodeSet> negatives, std::uint64_t seed);

struct MeasureComparison {
  double degree = 0.0;
  double pair_overlap = 0.0;
  double intersection = 0.0;

  double mean() const { return (degree + pair_overlap + intersection) / 3.0; }
};

MeasureComparison compare(const MeasureDistributions& original, const MeasureDistributions& sampled);

}  // namespace ahp
