#include "ahp/synth.hpp"

#include <algorithm>
#include <random>
#include <unordered_set>

#include "ahp/samplers.hpp"

namespace ahp {

namespace {

void validate(const SynthParams& p) {
  if (p.nodes < 2) throw InvariantError("synth needs at least 2 nodes");
  if (p.edges == 0) throw InvariantError("synth needs at least 1 hyperedge");
  if (p.communities == 0 || p.communities > p.nodes)
    throw InvariantError("community count must be in [1, nodes]");
  if (!(p.noise >= 0.0 && p.noise <= 1.0)) throw InvariantError("noise must be in [0, 1]");
  if (!(p.feature_noise >= 0.0)) throw InvariantError("feature noise must be non-negative");
  if (p.sizes.probability.empty()) throw InvariantError("empty size distribution");
  const std::size_t smallest = p.nodes / p.communities;
  for (const auto& [k, prob] : p.sizes.probability) {
    if (prob < 0.0) throw InvariantError("negative size probability");
    if (prob > 0.0 && (k < 2 || k > smallest))
      throw InvariantError("hyperedge size " + std::to_string(k) + " does not fit a community of " +
                           std::to_string(smallest) + " nodes");
  }
}

}  // namespace

SynthData make_planted(const SynthParams& p) {
  validate(p);
  Rng rng(mix_seed(p.seed));
  const std::size_t n = p.nodes, c = p.communities;

  std::vector<std::uint32_t> community(n);
  std::vector<std::size_t> begin(c + 1);
  for (std::size_t i = 0; i <= c; ++i) begin[i] = i * n / c;
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t v = begin[i]; v < begin[i + 1]; ++v) community[v] = static_cast<std::uint32_t>(i);

  FeatureMatrix x;
  x.rows = n;
  x.cols = c;
  x.data.assign(n * c, 0.0);
  std::normal_distribution<double> gauss(0.0, p.feature_noise);
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t j = 0; j < c; ++j)
      x.data[v * c + j] = (community[v] == j ? 1.0 : 0.0) + (p.feature_noise > 0.0 ? gauss(rng) : 0.0);

  // Community members of each node ordered by feature distance, self first.
  auto dist2 = [&](std::size_t u, std::size_t v) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const double d = x.data[u * c + j] - x.data[v * c + j];
      s += d * d;
    }
    return s;
  };
  std::vector<std::vector<NodeId>> nearest(n);
  for (std::size_t v = 0; v < n; ++v) {
    auto& near = nearest[v];
    const std::size_t com = community[v];
    for (std::size_t u = begin[com]; u < begin[com + 1]; ++u) near.push_back(static_cast<NodeId>(u));
    std::stable_sort(near.begin(), near.end(), [&](NodeId a, NodeId b) {
      if (a == v || b == v) return a == v && b != v;
      return dist2(v, a) < dist2(v, b);
    });
  }

  std::bernoulli_distribution swap(p.noise);
  std::unordered_set<NodeSet, NodeSetHash> seen;
  std::vector<NodeSet> edges;
  edges.reserve(p.edges);
  constexpr std::size_t kMaxAttempts = 1000;
  while (edges.size() < p.edges) {
    NodeSet set;
    for (std::size_t attempt = 0; attempt < kMaxAttempts; ++attempt) {
      const std::size_t k = draw_size(p.sizes, rng);
      const std::size_t com = uniform_index(rng, c);
      const std::size_t centre = begin[com] + uniform_index(rng, begin[com + 1] - begin[com]);
      std::vector<NodeId> pool = nearest[centre];
      if (p.locality > 0) pool.resize(std::min(pool.size(), std::max(k, 2 * p.locality + 1)));
      for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + uniform_index(rng, pool.size() - i)]);
      pool.resize(k);
      std::bernoulli_distribution sw(p.noise);
      if (c > 1) {
        for (auto& v : pool) {
          if (!sw(rng)) continue;
          NodeId u;
          do {
            u = static_cast<NodeId>(uniform_index(rng, n));
          } while (community[u] == com || std::find(pool.begin(), pool.end(), u) != pool.end());
          v = u;
        }
      }
      set = NodeSet(pool);
      if (!seen.contains(set)) break;
    }
    seen.insert(set);
    edges.push_back(std::move(set));
  }

  return SynthData{Hypergraph(n, std::move(edges)), std::move(x), std::move(community)};
}

}  // namespace ahp
