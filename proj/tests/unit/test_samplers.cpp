#include <gtest/gtest.h>

#include <map>

#include "ahp/metrics.hpp"
#include "ahp/samplers.hpp"
#include "oracles.hpp"

using namespace ahp;

namespace {

SamplerContext context(std::size_t n, std::vector<NodeSet> edges, bool observe = true, std::uint64_t seed = 1) {
  ObservedSet obs;
  if (observe) obs.insert(edges.begin(), edges.end());
  auto sizes = size_distribution(edges);
  return SamplerContext(Hypergraph(n, std::move(edges)), std::move(sizes), std::move(obs), seed);
}

// 100 nodes, 20 communities of 5; each community holds a 3-edge and two pairs,
// and consecutive communities are chained by a pair.
std::vector<NodeSet> test_edges() {
  std::vector<NodeSet> edges;
  for (NodeId c = 0; c < 20; ++c) {
    const NodeId b = 5 * c;
    edges.push_back({b, b + 1, b + 2});
    edges.push_back({b + 2, b + 3});
    edges.push_back({b + 3, b + 4});
    edges.push_back({b + 1, b + 3, b + 4, b + 0});
    if (c + 1 < 20) edges.push_back({b + 4, b + 5});
  }
  return edges;
}

}  // namespace

TEST(DrawSize, DegenerateDistribution) {
  SizeDistribution d{{{3, 1.0}}};
  Rng rng(0);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(draw_size(d, rng), 3u);
}

TEST(DrawSize, BinomialConcentration) {
  SizeDistribution d{{{2, 0.5}, {4, 0.5}}};
  Rng rng(11);
  std::size_t twos = 0;
  for (int i = 0; i < 10000; ++i) twos += draw_size(d, rng) == 2 ? 1 : 0;
  const double frac = twos / 10000.0;
  EXPECT_GE(frac, 0.45);
  EXPECT_LE(frac, 0.55);
}

TEST(DrawSize, EmptySupport) {
  Rng rng(0);
  EXPECT_THROW(draw_size(SizeDistribution{}, rng), InvariantError);
}

TEST(Sns, FullNodeSet) {
  auto ctx = context(4, {{0, 1}, {2, 3}}, false);
  EXPECT_EQ(sns_sample(ctx, 4), (NodeSet{0, 1, 2, 3}));
}

TEST(Sns, TooLarge) {
  auto ctx = context(3, {{0, 1}}, false);
  EXPECT_THROW(sns_sample(ctx, 4), InvariantError);
}

TEST(Sns, UniformOverPairs) {
  auto ctx = context(3, {{0, 1}}, false);
  std::map<NodeSet, std::size_t> counts;
  for (int i = 0; i < 30000; ++i) ++counts[sns_sample(ctx, 2)];
  ASSERT_EQ(counts.size(), 3u);
  for (const auto& [s, c] : counts) EXPECT_NEAR(c / 30000.0, 1.0 / 3.0, 0.02);
}

TEST(Sns, RejectsObserved) {
  // Of the three pairs, {0,1} is observed, so only the other two appear.
  auto ctx = context(3, {{0, 1}});
  for (int i = 0; i < 2000; ++i) EXPECT_NE(sns_sample(ctx, 2), (NodeSet{0, 1}));
  EXPECT_EQ(ctx.stats.rejection_exhausted, 0u);
}

TEST(Sns, ExhaustedBudgetEmitsAndCounts) {
  auto ctx = context(2, {{0, 1}});
  EXPECT_EQ(sns_sample(ctx, 2), (NodeSet{0, 1}));
  EXPECT_EQ(ctx.stats.rejection_exhausted, 1u);
}

TEST(Mns, PairIsAClique) {
  auto ctx = context(5, {{0, 1, 2}, {3, 4}}, false);
  const auto adj = ctx.clique;
  for (int i = 0; i < 500; ++i) {
    const NodeSet s = mns_sample(ctx, 2);
    EXPECT_TRUE(adj.adjacent(s[0], s[1]));
  }
}

TEST(Mns, PathGraphOnlyConnectedTriple) {
  auto ctx = context(3, {{0, 1}, {1, 2}}, false);
  for (int i = 0; i < 500; ++i) EXPECT_EQ(mns_sample(ctx, 3), (NodeSet{0, 1, 2}));
}

TEST(Mns, StallPadsAndCounts) {
  auto ctx = context(6, {{0, 1}}, false);
  const NodeSet s = mns_sample(ctx, 5);
  EXPECT_EQ(s.size(), 5u);
  EXPECT_TRUE(s.contains(0) && s.contains(1));
  EXPECT_EQ(ctx.stats.mns_stalls, 1u);
}

TEST(Mns, OutputsAreConnected) {
  const auto edges = test_edges();
  auto ctx = context(100, edges);
  for (int i = 0; i < 2000; ++i) {
    const NodeSet s = mns_sample(ctx, 2 + i % 6);
    ASSERT_EQ(s.size(), 2u + i % 6);
    ASSERT_TRUE(oracle::connected_in_cliques(edges, s));
  }
}

// e = {0,1}: dropping 0 leaves candidate {2}, giving the observed {1,2};
// dropping 1 leaves no candidate. Symmetrically for {1,2}. Every attempt
// fails, so CNS falls back to MNS, whose pairs are all observed too.
TEST(Cns, PathWithBothEdgesObservedFallsBack) {
  auto ctx = context(3, {{0, 1}, {1, 2}});
  const NodeSet s = cns_sample(ctx);
  EXPECT_EQ(s.size(), 2u);
  EXPECT_EQ(ctx.stats.scheme_counts[2], 1u);
  EXPECT_GE(ctx.stats.rejection_exhausted, 1u);
}

TEST(Cns, ForcedReplacementIsObserved) {
  // From {0,1,2} dropping 2 the only candidate is 3, giving the observed {0,1,3}.
  auto open = context(4, {{0, 1, 2}, {0, 1, 3}}, false, 5);
  Rng rng(5);
  SamplerStats st;
  bool saw = false;
  for (int i = 0; i < 500; ++i) {
    const CnsDraw d = cns_draw(open, rng, st);
    ASSERT_TRUE(d.source);
    if (*d.source == 0 && d.removed == 2) {
      EXPECT_EQ(d.added, 3u);
      EXPECT_EQ(d.nodes, (NodeSet{0, 1, 3}));
      saw = true;
    }
  }
  EXPECT_TRUE(saw);

  auto closed = context(4, {{0, 1, 2}, {0, 1, 3}});
  cns_sample(closed);
  EXPECT_EQ(closed.stats.rejection_exhausted, 1u);
}

TEST(Cns, ValidReplacement) {
  // From {0,1,2} dropping 0: node 3 is adjacent to both 1 and 2.
  auto ctx = context(4, {{0, 1, 2}, {2, 3}, {1, 3}, {0, 3}});
  Rng rng(9);
  SamplerStats st;
  bool saw = false;
  for (int i = 0; i < 500; ++i) {
    const CnsDraw d = cns_draw(ctx, rng, st);
    if (d.source && *d.source == 0 && d.removed == 0) {
      EXPECT_EQ(d.nodes, (NodeSet{1, 2, 3}));
      saw = true;
    }
    EXPECT_FALSE(ctx.observed.contains(d.nodes));
  }
  EXPECT_TRUE(saw);
}

TEST(Cns, SingleNodeSwapWithFullyAdjacentReplacement) {
  const auto edges = test_edges();
  auto ctx = context(100, edges);
  Rng rng(3);
  SamplerStats st;
  for (int i = 0; i < 3000; ++i) {
    const CnsDraw d = cns_draw(ctx, rng, st);
    ASSERT_TRUE(d.source);
    const NodeSet& src = edges[*d.source];
    ASSERT_EQ(d.nodes.size(), src.size());
    std::size_t shared = 0;
    for (auto v : d.nodes) shared += src.contains(v) ? 1 : 0;
    EXPECT_EQ(shared, src.size() - 1);
    EXPECT_TRUE(src.contains(d.removed));
    EXPECT_FALSE(src.contains(d.added));
    for (auto v : src)
      if (v != d.removed) {
        EXPECT_TRUE(oracle::co_member(edges, v, d.added));
      }
  }
}

TEST(SampleBatch, EmptyAndDeterministic) {
  auto a = context(100, test_edges(), true, 42);
  auto b = context(100, test_edges(), true, 42);
  EXPECT_TRUE(sample_batch(a, SamplerKind::MIXED, 0).empty());
  EXPECT_EQ(sample_batch(a, SamplerKind::MIXED, 500), sample_batch(b, SamplerKind::MIXED, 500));
}

TEST(SampleBatch, MixedSchemeCounts) {
  auto ctx = context(100, test_edges());
  sample_batch(ctx, SamplerKind::MIXED, 30000);
  const auto& c = ctx.stats.scheme_counts;
  // A CNS fallback adds an MNS count on top of its CNS attempt.
  EXPECT_EQ(ctx.stats.cns_fallbacks, 0u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(static_cast<double>(c[i]), 10000.0, 300.0) << i;
}

TEST(SampleBatch, NegativesAvoidObserved) {
  const auto edges = test_edges();
  for (auto kind : {SamplerKind::SNS, SamplerKind::MNS, SamplerKind::CNS, SamplerKind::MIXED}) {
    auto ctx = context(100, edges);
    for (const auto& s : sample_batch(ctx, kind, 2000)) EXPECT_FALSE(ctx.observed.contains(s));
    EXPECT_EQ(ctx.stats.rejection_exhausted, 0u);
  }
}

TEST(SampleBatch, SizesFollowHistogram) {
  const auto edges = test_edges();
  const auto hist = size_distribution(edges);
  for (auto kind : {SamplerKind::SNS, SamplerKind::MNS}) {
    auto ctx = context(100, edges);
    std::map<std::size_t, std::size_t> counts;
    const std::size_t n = 10000;
    for (const auto& s : sample_batch(ctx, kind, n)) ++counts[s.size()];
    for (const auto& [k, c] : counts) {
      ASSERT_TRUE(hist.probability.contains(k));
      const double p = hist.probability.at(k);
      EXPECT_NEAR(c / static_cast<double>(n), p, oracle::binomial_bound(n, p));
    }
  }
}

TEST(ObservedPositives, CoversBundle) {
  const Hypergraph h(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}, {0, 2}});
  const SplitBundle b = split_hyperedges(h, 0);
  const auto obs = observed_positives(h, b);
  for (const auto& e : h.hyperedges()) EXPECT_TRUE(obs.contains(e));
}

TEST(CliqueConnected, AgreesWithOracle) {
  const auto edges = test_edges();
  const CliqueAdjacency adj(Hypergraph(100, edges));
  Rng rng(2);
  for (int i = 0; i < 2000; ++i) {
    std::vector<NodeId> v;
    const NodeId base = static_cast<NodeId>(uniform_index(rng, 90));
    while (v.size() < 3) {
      const NodeId x = base + static_cast<NodeId>(uniform_index(rng, 10));
      if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
    }
    const NodeSet s(v);
    EXPECT_EQ(clique_connected(adj, s), oracle::connected_in_cliques(edges, s));
  }
}
