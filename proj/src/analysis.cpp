#include "ahp/analysis.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "ahp/metrics.hpp"

namespace ahp {

namespace {

std::vector<std::uint32_t> degrees(const Hypergraph& h) {
  std::vector<std::uint32_t> d(h.num_nodes());
  for (NodeId v = 0; v < h.num_nodes(); ++v) d[v] = static_cast<std::uint32_t>(h.degree(v));
  return d;
}

// Overlaps of node u with every v > u, in increasing v. `count` is a zeroed
// scratch buffer of size num_nodes and is left zeroed.
void overlaps_of(const Hypergraph& h, NodeId u, std::vector<std::uint32_t>& count, std::vector<NodeId>& touched,
                 std::vector<std::uint32_t>& out) {
  touched.clear();
  for (auto e : h.incident_edges(u))
    for (NodeId v : h.edge(e))
      if (v > u && count[v]++ == 0) touched.push_back(v);
  std::sort(touched.begin(), touched.end());
  for (NodeId v : touched) {
    out.push_back(count[v]);
    count[v] = 0;
  }
}

// Intersections of edge e with every f > e, in increasing f.
void intersections_of(const Hypergraph& h, EdgeId e, std::vector<std::uint32_t>& count,
                      std::vector<EdgeId>& touched, std::vector<std::uint32_t>& out) {
  touched.clear();
  for (NodeId v : h.edge(e))
    for (auto f : h.incident_edges(v))
      if (f > e && count[f]++ == 0) touched.push_back(f);
  std::sort(touched.begin(), touched.end());
  for (EdgeId f : touched) {
    out.push_back(count[f]);
    count[f] = 0;
  }
}

void concat(std::vector<std::vector<std::uint32_t>>& parts, std::vector<std::uint32_t>& out) {
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  out.reserve(total);
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
}

std::vector<double> as_doubles(const std::vector<std::uint32_t>& v) { return {v.begin(), v.end()}; }

}  // namespace

namespace serial {

MeasureDistributions measure(const Hypergraph& h) {
  MeasureDistributions m;
  m.node_degrees = degrees(h);
  std::vector<std::uint32_t> count(std::max(h.num_nodes(), h.num_edges()), 0);
  std::vector<std::uint32_t> touched;
  for (NodeId u = 0; u < h.num_nodes(); ++u) overlaps_of(h, u, count, touched, m.pair_overlaps);
  for (EdgeId e = 0; e < h.num_edges(); ++e) intersections_of(h, e, count, touched, m.intersection_sizes);
  return m;
}

}  // namespace serial

MeasureDistributions measure(const Hypergraph& h) {
  MeasureDistributions m;
  m.node_degrees = degrees(h);
  std::vector<std::vector<std::uint32_t>> per_node(h.num_nodes()), per_edge(h.num_edges());
  const std::size_t scratch = std::max(h.num_nodes(), h.num_edges());

#pragma omp parallel
  {
    std::vector<std::uint32_t> count(scratch, 0);
    std::vector<std::uint32_t> touched;
#pragma omp for schedule(dynamic, 32)
    for (std::int64_t u = 0; u < static_cast<std::int64_t>(h.num_nodes()); ++u)
      overlaps_of(h, static_cast<NodeId>(u), count, touched, per_node[u]);
#pragma omp for schedule(dynamic, 32)
    for (std::int64_t e = 0; e < static_cast<std::int64_t>(h.num_edges()); ++e)
      intersections_of(h, static_cast<EdgeId>(e), count, touched, per_edge[e]);
  }
  concat(per_node, m.pair_overlaps);
  concat(per_edge, m.intersection_sizes);
  return m;
}

std::vector<std::size_t> replacement_indices(std::size_t num_edges, std::uint64_t seed) {
  const std::size_t count = (num_edges + 5) / 6;
  Rng rng(seed);
  std::vector<std::size_t> idx(num_edges);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < count; ++i) std::swap(idx[i], idx[i + uniform_index(rng, num_edges - i)]);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

Hypergraph sampled_hypergraph(const Hypergraph& h, std::span<const NodeSet> negatives, std::uint64_t seed) {
  const auto idx = replacement_indices(h.num_edges(), seed);
  if (negatives.size() != idx.size())
    throw InvariantError("sampled_hypergraph needs " + std::to_string(idx.size()) + " negatives, got " +
                         std::to_string(negatives.size()));
  std::vector<NodeSet> edges = h.hyperedges();
  for (std::size_t i = 0; i < idx.size(); ++i) edges[idx[i]] = negatives[i];
  return Hypergraph(h.num_nodes(), std::move(edges));
}

MeasureComparison compare(const MeasureDistributions& a, const MeasureDistributions& b) {
  MeasureComparison c;
  c.degree = ks_statistic(as_doubles(a.node_degrees), as_doubles(b.node_degrees));
  c.pair_overlap = ks_statistic(as_doubles(a.pair_overlaps), as_doubles(b.pair_overlaps));
  c.intersection = ks_statistic(as_doubles(a.intersection_sizes), as_doubles(b.intersection_sizes));
  return c;
}

}  // namespace ahp
