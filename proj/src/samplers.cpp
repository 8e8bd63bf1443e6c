#include "ahp/samplers.hpp"

#include <algorithm>
#include <exception>
#include <queue>
#include <set>

#include "ahp/log.hpp"

namespace ahp {

std::string_view to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::SNS: return "sns";
    case SamplerKind::MNS: return "mns";
    case SamplerKind::CNS: return "cns";
    case SamplerKind::MIXED: return "mixed";
  }
  return "?";
}

SamplerKind sampler_kind_from_string(std::string_view s) {
  if (s == "sns") return SamplerKind::SNS;
  if (s == "mns") return SamplerKind::MNS;
  if (s == "cns") return SamplerKind::CNS;
  if (s == "mixed") return SamplerKind::MIXED;
  throw InvariantError("unknown sampler kind '" + std::string(s) + "'");
}

SamplerStats& SamplerStats::operator+=(const SamplerStats& o) {
  rejection_exhausted += o.rejection_exhausted;
  mns_stalls += o.mns_stalls;
  cns_fallbacks += o.cns_fallbacks;
  for (std::size_t i = 0; i < scheme_counts.size(); ++i) scheme_counts[i] += o.scheme_counts[i];
  return *this;
}

SamplerContext::SamplerContext(Hypergraph structure, SizeDistribution sizes_, ObservedSet observed_,
                               std::uint64_t seed)
    : hypergraph(std::move(structure)),
      clique(hypergraph),
      sizes(std::move(sizes_)),
      observed(std::move(observed_)),
      rng(seed) {}

std::size_t draw_size(const SizeDistribution& sizes, Rng& rng) {
  if (sizes.probability.empty()) throw InvariantError("size distribution has empty support");
  std::vector<std::size_t> ks;
  std::vector<double> ps;
  for (auto [k, p] : sizes.probability) {
    ks.push_back(k);
    ps.push_back(p);
  }
  std::discrete_distribution<std::size_t> dist(ps.begin(), ps.end());
  return ks[dist(rng)];
}

std::size_t draw_size(SamplerContext& ctx) { return draw_size(ctx.sizes, ctx.rng); }

namespace {

// Floyd's algorithm: k distinct ids from [0, n), uniform over k-subsets.
NodeSet uniform_subset(std::size_t n, std::size_t k, Rng& rng) {
  std::set<NodeId> chosen;
  for (std::size_t j = n - k; j < n; ++j) {
    auto t = static_cast<NodeId>(uniform_index(rng, j + 1));
    if (!chosen.insert(t).second) chosen.insert(static_cast<NodeId>(j));
  }
  return NodeSet(std::vector<NodeId>(chosen.begin(), chosen.end()));
}

// Pads `nodes` with uniform random nodes not already present until it has k.
void pad_uniform(std::vector<NodeId>& nodes, std::size_t n, std::size_t k, Rng& rng) {
  std::vector<NodeId> rest;
  for (NodeId v = 0; v < n; ++v)
    if (std::find(nodes.begin(), nodes.end(), v) == nodes.end()) rest.push_back(v);
  for (std::size_t i = 0; nodes.size() < k; ++i) {
    std::swap(rest[i], rest[i + uniform_index(rng, rest.size() - i)]);
    nodes.push_back(rest[i]);
  }
}

// Adds the nodes of `edge` missing from `set`. If that would pass k, only a
// uniform random subset of the new nodes is kept so the result has exactly k.
void merge_trimmed(std::vector<NodeId>& set, std::span<const NodeId> edge, std::size_t k, Rng& rng) {
  std::vector<NodeId> fresh;
  for (NodeId v : edge)
    if (std::find(set.begin(), set.end(), v) == set.end()) fresh.push_back(v);
  const std::size_t room = k > set.size() ? k - set.size() : 0;
  if (fresh.size() > room) {
    for (std::size_t i = 0; i < room; ++i) std::swap(fresh[i], fresh[i + uniform_index(rng, fresh.size() - i)]);
    fresh.resize(room);
  }
  set.insert(set.end(), fresh.begin(), fresh.end());
}

// One MNS growth: start from a random clique edge, merge random boundary edges.
// When every restart stalls, the largest partial set is padded uniformly.
NodeSet mns_grow(const SamplerContext& ctx, std::size_t k, Rng& rng, SamplerStats& stats) {
  const auto& edges = ctx.clique.edges();
  std::vector<NodeId> largest;
  for (std::size_t restart = 0; restart < kMaxRetries; ++restart) {
    const auto [a, b] = edges[uniform_index(rng, edges.size())];
    std::vector<NodeId> set;
    const NodeId seed_edge[2] = {a, b};
    merge_trimmed(set, seed_edge, k, rng);
    std::vector<std::pair<NodeId, NodeId>> boundary;
    while (set.size() < k) {
      boundary.clear();
      for (NodeId u : set)
        for (NodeId w : ctx.clique.neighbors(u))
          if (std::find(set.begin(), set.end(), w) == set.end()) boundary.emplace_back(u, w);
      if (boundary.empty()) break;
      const auto [u, w] = boundary[uniform_index(rng, boundary.size())];
      const NodeId merged[2] = {u, w};
      merge_trimmed(set, merged, k, rng);
    }
    if (set.size() >= k) return NodeSet(std::move(set));
    if (set.size() > largest.size()) largest = std::move(set);
  }
  ++stats.mns_stalls;
  pad_uniform(largest, ctx.hypergraph.num_nodes(), k, rng);
  return NodeSet(std::move(largest));
}

template <typename Draw>
NodeSet with_rejection(const SamplerContext& ctx, SamplerStats& stats, Draw&& draw) {
  NodeSet s = draw();
  for (std::size_t attempt = 1; attempt < kMaxRetries && ctx.observed.contains(s); ++attempt) s = draw();
  if (ctx.observed.contains(s)) ++stats.rejection_exhausted;
  return s;
}

void warn_on_fallbacks(const SamplerStats& before, const SamplerStats& after) {
  if (after.rejection_exhausted > before.rejection_exhausted)
    log::warn("sampler emitted " + std::to_string(after.rejection_exhausted - before.rejection_exhausted) +
              " negative(s) equal to an observed positive after exhausting retries");
  if (after.mns_stalls > before.mns_stalls)
    log::warn("MNS stalled " + std::to_string(after.mns_stalls - before.mns_stalls) +
              " time(s); padded with uniformly random nodes");
  if (after.cns_fallbacks > before.cns_fallbacks)
    log::warn("CNS found no valid replacement " + std::to_string(after.cns_fallbacks - before.cns_fallbacks) +
              " time(s); fell back to MNS");
}

}  // namespace

NodeSet sns_sample(const SamplerContext& ctx, std::size_t k, Rng& rng, SamplerStats& stats) {
  const std::size_t n = ctx.hypergraph.num_nodes();
  if (k == 0 || k > n)
    throw InvariantError("SNS size " + std::to_string(k) + " not in [1, " + std::to_string(n) + "]");
  ++stats.scheme_counts[0];
  return with_rejection(ctx, stats, [&] { return uniform_subset(n, k, rng); });
}

NodeSet sns_sample(SamplerContext& ctx, std::size_t k) {
  auto before = ctx.stats;
  auto s = sns_sample(ctx, k, ctx.rng, ctx.stats);
  warn_on_fallbacks(before, ctx.stats);
  return s;
}

NodeSet mns_sample(const SamplerContext& ctx, std::size_t k, Rng& rng, SamplerStats& stats) {
  if (ctx.clique.edges().empty()) throw InvariantError("MNS needs at least one clique-expansion edge");
  if (k < 2 || k > ctx.hypergraph.num_nodes())
    throw InvariantError("MNS size " + std::to_string(k) + " out of range");
  ++stats.scheme_counts[1];
  return with_rejection(ctx, stats, [&] { return mns_grow(ctx, k, rng, stats); });
}

NodeSet mns_sample(SamplerContext& ctx, std::size_t k) {
  auto before = ctx.stats;
  auto s = mns_sample(ctx, k, ctx.rng, ctx.stats);
  warn_on_fallbacks(before, ctx.stats);
  return s;
}

CnsDraw cns_draw(const SamplerContext& ctx, Rng& rng, SamplerStats& stats) {
  const auto& h = ctx.hypergraph;
  if (h.num_edges() == 0) throw InvariantError("CNS needs a nonempty hypergraph");
  std::optional<CnsDraw> collided;
  std::size_t last_size = 2;
  std::vector<NodeId> candidates;
  for (std::size_t attempt = 0; attempt < kMaxRetries; ++attempt) {
    const auto e = static_cast<EdgeId>(uniform_index(rng, h.num_edges()));
    const auto& edge = h.edge(e);
    last_size = edge.size();
    const NodeId removed = edge[uniform_index(rng, edge.size())];
    std::vector<NodeId> rest;
    for (NodeId v : edge)
      if (v != removed) rest.push_back(v);
    candidates.clear();
    for (NodeId u : ctx.clique.neighbors(rest[0])) {
      if (edge.contains(u)) continue;
      bool all = true;
      for (std::size_t i = 1; i < rest.size() && all; ++i) all = ctx.clique.adjacent(u, rest[i]);
      if (all) candidates.push_back(u);
    }
    if (candidates.empty()) continue;
    const NodeId added = candidates[uniform_index(rng, candidates.size())];
    rest.push_back(added);
    CnsDraw d{NodeSet(std::move(rest)), e, removed, added};
    if (!ctx.observed.contains(d.nodes)) {
      ++stats.scheme_counts[2];
      return d;
    }
    collided = std::move(d);
  }
  if (collided) {
    ++stats.scheme_counts[2];
    ++stats.rejection_exhausted;
    return *collided;
  }
  ++stats.cns_fallbacks;
  return CnsDraw{mns_sample(ctx, last_size, rng, stats), std::nullopt, 0, 0};
}

NodeSet cns_sample(SamplerContext& ctx) {
  auto before = ctx.stats;
  auto d = cns_draw(ctx, ctx.rng, ctx.stats);
  warn_on_fallbacks(before, ctx.stats);
  return std::move(d.nodes);
}

std::vector<NodeSet> sample_batch(SamplerContext& ctx, SamplerKind kind, std::size_t n) {
  std::vector<NodeSet> out(n);
  if (n == 0) return out;
  const std::uint64_t batch_seed = ctx.rng();
  std::vector<SamplerStats> per(n);
  std::exception_ptr failure;
  const SamplerContext& cctx = ctx;

#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    try {
      Rng rng = derive_rng(batch_seed, static_cast<std::uint64_t>(i));
      auto& st = per[i];
      SamplerKind k = kind;
      if (k == SamplerKind::MIXED) k = static_cast<SamplerKind>(uniform_index(rng, 3));
      switch (k) {
        case SamplerKind::SNS: out[i] = sns_sample(cctx, draw_size(cctx.sizes, rng), rng, st); break;
        case SamplerKind::MNS: out[i] = mns_sample(cctx, draw_size(cctx.sizes, rng), rng, st); break;
        default: out[i] = cns_draw(cctx, rng, st).nodes; break;
      }
    } catch (...) {
#pragma omp critical(ahp_sample_batch)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  auto before = ctx.stats;
  for (const auto& s : per) ctx.stats += s;
  warn_on_fallbacks(before, ctx.stats);
  return out;
}

ObservedSet observed_positives(const Hypergraph& h, const SplitBundle& b) {
  ObservedSet obs;
  for (const auto* part : {&b.train, &b.validation, &b.test})
    for (auto i : *part) obs.insert(h.edge(static_cast<EdgeId>(i)));
  return obs;
}

bool clique_connected(const CliqueAdjacency& adj, const NodeSet& s) {
  std::vector<bool> seen(s.size(), false);
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!q.empty()) {
    const NodeId u = s[q.front()];
    q.pop();
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (!seen[j] && adj.adjacent(u, s[j])) {
        seen[j] = true;
        ++reached;
        q.push(j);
      }
    }
  }
  return reached == s.size();
}

}  // namespace ahp
