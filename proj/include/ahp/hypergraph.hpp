/**
 * @file hypergraph.hpp
 * @brief Hypergraph storage, node features, train/validation/test splits and
 *        the clique expansion.
 */
#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ahp/common.hpp"
#include "ahp/sparse.hpp"

namespace ahp {

/// Canonical node subset: strictly increasing ids, nonempty.
class NodeSet {
 public:
  NodeSet() = default;
  /// Sorts and validates; throws InvariantError on duplicates or empty input.
  explicit NodeSet(std::vector<NodeId> nodes);
  NodeSet(std::initializer_list<NodeId> nodes) : NodeSet(std::vector<NodeId>(nodes)) {}

  std::span<const NodeId> nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  NodeId operator[](std::size_t i) const { return nodes_[i]; }
  auto begin() const { return nodes_.begin(); }
  auto end() const { return nodes_.end(); }
  bool contains(NodeId v) const;

  friend bool operator==(const NodeSet&, const NodeSet&) = default;
  friend auto operator<=>(const NodeSet&, const NodeSet&) = default;

 private:
  std::vector<NodeId> nodes_;
};

struct NodeSetHash {
  std::size_t operator()(const NodeSet& s) const noexcept;
};

/// Immutable hypergraph with a binary incidence matrix A (nodes x hyperedges).
class Hypergraph {
 public:
  Hypergraph() = default;
  /// Throws InvariantError when an edge has fewer than two nodes or an id is
  /// out of range.
  Hypergraph(std::size_t num_nodes, std::vector<NodeSet> hyperedges);

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<NodeSet>& hyperedges() const { return edges_; }
  const NodeSet& edge(EdgeId e) const { return edges_[e]; }

  /// Row view: for node i, the hyperedges containing it.
  const CsrMatrix& incidence() const { return incidence_; }
  /// Column view: for hyperedge j, its nodes.
  const CsrMatrix& incidence_transpose() const { return incidence_t_; }

  std::span<const std::uint32_t> incident_edges(NodeId v) const { return incidence_.row_indices(v); }
  std::size_t degree(NodeId v) const { return incidence_.row_nnz(v); }

 private:
  std::size_t num_nodes_ = 0;
  std::vector<NodeSet> edges_;
  CsrMatrix incidence_;
  CsrMatrix incidence_t_;
};

/// Dense per-node features, row-major.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
};

/// Indices into the source hyperedge list. structure_visible is parallel to train.
struct SplitBundle {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  std::vector<bool> structure_visible;

  std::size_t num_masked() const;
};

/// Empirical hyperedge-size probabilities, keyed by size.
struct SizeDistribution {
  std::map<std::size_t, double> probability;

  double mean() const;
};

/// Symmetric boolean adjacency of the clique expansion, as sorted neighbor lists.
class CliqueAdjacency {
 public:
  CliqueAdjacency() = default;
  explicit CliqueAdjacency(const Hypergraph& h);

  std::size_t num_nodes() const { return neighbors_.size(); }
  std::span<const NodeId> neighbors(NodeId v) const { return neighbors_[v]; }
  bool adjacent(NodeId u, NodeId v) const;
  /// Each undirected edge once, as (u, v) with u < v, in lexicographic order.
  const std::vector<std::pair<NodeId, NodeId>>& edges() const { return edges_; }

 private:
  std::vector<std::vector<NodeId>> neighbors_;
  std::vector<std::pair<NodeId, NodeId>> edges_;
};

// ---------------------------------------------------------------------------
// Operations

/// Parses the hyperedge file format: one hyperedge per line, whitespace
/// separated ids, '#' comments, optional "# num_nodes: N" header.
Hypergraph parse_hypergraph(const std::string& text);
Hypergraph load_hypergraph(const std::filesystem::path& path);

/// Canonical text form; parse_hypergraph(serialize_hypergraph(h)) == h.
std::string serialize_hypergraph(const Hypergraph& h);
void save_hypergraph(const Hypergraph& h, const std::filesystem::path& path);

/// Bijection between arbitrary text labels and dense node ids.
struct LabelMap {
  std::vector<std::string> labels;  // labels[id]
};

/// Like load_hypergraph but accepts arbitrary tokens; ids follow first appearance.
Hypergraph load_labeled_hypergraph(const std::filesystem::path& path, LabelMap& labels);
void save_label_map(const LabelMap& labels, const std::filesystem::path& path);
LabelMap load_label_map(const std::filesystem::path& path);

/// Dense rows or "i j value" triplets, both after a "num_nodes d" header.
FeatureMatrix parse_features(const std::string& text);
FeatureMatrix load_features(const std::filesystem::path& path);
void save_features(const FeatureMatrix& x, const std::filesystem::path& path);

SplitBundle split_hyperedges(const Hypergraph& h, std::uint64_t seed);

/// Train hyperedges whose structure_visible flag is set; same node count as h.
Hypergraph structure_hypergraph(const Hypergraph& h, const SplitBundle& b);

/// Hyperedges at the given indices.
std::vector<NodeSet> select_edges(const Hypergraph& h, std::span<const std::size_t> idx);

CliqueAdjacency clique_adjacency(const Hypergraph& h);

SizeDistribution size_distribution(std::span<const NodeSet> edges);

}  // namespace ahp
