/**
 * @file samplers.hpp
 * @brief Heuristic negative samplers: sized (SNS), motif (MNS), clique (CNS)
 *        and a uniform mixture of the three.
 *
 * Every sampler rejects sets that coincide with an observed positive and
 * resamples up to kMaxRetries times; after that the colliding set is emitted
 * and counted in SamplerStats::rejection_exhausted.
 */
#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "ahp/hypergraph.hpp"

namespace ahp {

enum class SamplerKind { SNS, MNS, CNS, MIXED };

std::string_view to_string(SamplerKind k);
SamplerKind sampler_kind_from_string(std::string_view s);

inline constexpr std::size_t kMaxRetries = 100;

/// Fallback and scheme counters. Merged across batches.
struct SamplerStats {
  std::size_t rejection_exhausted = 0;  // emitted despite colliding with a positive
  std::size_t mns_stalls = 0;           // MNS padded with uniform nodes
  std::size_t cns_fallbacks = 0;        // CNS replaced by an MNS sample
  std::array<std::size_t, 3> scheme_counts{};  // SNS, MNS, CNS actually used

  SamplerStats& operator+=(const SamplerStats& o);
};

using ObservedSet = std::unordered_set<NodeSet, NodeSetHash>;

/// Read-only sampling inputs plus a seeded stream.
struct SamplerContext {
  SamplerContext(Hypergraph structure, SizeDistribution sizes, ObservedSet observed, std::uint64_t seed);

  Hypergraph hypergraph;
  CliqueAdjacency clique;
  SizeDistribution sizes;
  ObservedSet observed;
  Rng rng;
  SamplerStats stats;
};

/// One CNS draw with provenance, for property checks.
struct CnsDraw {
  NodeSet nodes;
  std::optional<EdgeId> source;  // empty when the MNS fallback was used
  NodeId removed = 0;
  NodeId added = 0;
};

// Each single-sample function takes the stream and stats explicitly so that
// sample_batch can run them on per-sample child streams.

std::size_t draw_size(const SizeDistribution& sizes, Rng& rng);
std::size_t draw_size(SamplerContext& ctx);

NodeSet sns_sample(const SamplerContext& ctx, std::size_t k, Rng& rng, SamplerStats& stats);
NodeSet sns_sample(SamplerContext& ctx, std::size_t k);

NodeSet mns_sample(const SamplerContext& ctx, std::size_t k, Rng& rng, SamplerStats& stats);
NodeSet mns_sample(SamplerContext& ctx, std::size_t k);

CnsDraw cns_draw(const SamplerContext& ctx, Rng& rng, SamplerStats& stats);
NodeSet cns_sample(SamplerContext& ctx);

/// n negatives of the given kind. Sample i uses a child stream of one seed
/// drawn from ctx.rng, so the batch is identical for any OpenMP thread count.
std::vector<NodeSet> sample_batch(SamplerContext& ctx, SamplerKind kind, std::size_t n);

/// Every train, validation and test positive of the bundle.
ObservedSet observed_positives(const Hypergraph& h, const SplitBundle& b);

/// True when s induces a connected subgraph of the clique expansion.
bool clique_connected(const CliqueAdjacency& adj, const NodeSet& s);

}  // namespace ahp
