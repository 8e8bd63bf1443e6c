/**
 * @file oracles.hpp
 * @brief Independent reference implementations used by the tests.
 *
 * These are deliberately naive: quadratic enumerations and central
 * differences that share no code with the library beyond its data types.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "ahp/autodiff.hpp"
#include "ahp/hypergraph.hpp"

namespace ahp::oracle {

/// Fraction of (positive, negative) pairs ordered correctly, ties counting 1/2.
inline double pairwise_auroc(const std::vector<double>& pos, const std::vector<double>& neg) {
  double wins = 0.0;
  for (double p : pos)
    for (double n : neg) wins += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
  return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

/// Ranks by descending score with equal scores kept in input order, then
/// averages precision@rank over the positives by direct counting.
inline double rank_by_rank_ap(const std::vector<double>& scores, const std::vector<bool>& labels) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < order.size(); ++i)
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const auto a = order[i], b = order[j];
      if (scores[b] > scores[a] || (scores[b] == scores[a] && b < a)) std::swap(order[i], order[j]);
    }
  double total = 0.0;
  std::size_t positives = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (!labels[order[r]]) continue;
    std::size_t hits = 0;
    for (std::size_t q = 0; q <= r; ++q) hits += labels[order[q]] ? 1 : 0;
    total += static_cast<double>(hits) / static_cast<double>(r + 1);
    ++positives;
  }
  return positives == 0 ? 0.0 : total / static_cast<double>(positives);
}

/// Evaluates both empirical CDFs at every observed value by counting.
inline double stepwise_ks(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> points(a);
  points.insert(points.end(), b.begin(), b.end());
  double best = 0.0;
  for (double t : points) {
    double fa = 0.0, fb = 0.0;
    for (double x : a) fa += x <= t ? 1.0 : 0.0;
    for (double x : b) fb += x <= t ? 1.0 : 0.0;
    best = std::max(best, std::abs(fa / static_cast<double>(a.size()) - fb / static_cast<double>(b.size())));
  }
  return best;
}

/// Relative difference with a floor on the denominator so that gradients
/// that are zero up to rounding compare by absolute error.
inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

/// Worst relative error between reverse-mode gradients of `loss` and
/// central differences with step h, over every element of `params`.
/// `loss` must bind parameters with Tape::param.
inline double gradient_check(const std::vector<Parameter*>& params, const std::function<Var(Tape&)>& loss,
                             double h = 1e-5) {
  for (auto* p : params) p->zero_grad();
  {
    Tape t;
    t.backward(loss(t));
  }
  auto eval = [&] {
    Tape t(false);
    return t.scalar(loss(t));
  };
  double worst = 0.0;
  for (auto* p : params)
    for (std::size_t i = 0; i < p->value.data.size(); ++i) {
      const double old = p->value.data[i];
      p->value.data[i] = old + h;
      const double up = eval();
      p->value.data[i] = old - h;
      const double down = eval();
      p->value.data[i] = old;
      worst = std::max(worst, relative_error(p->grad.data[i], (up - down) / (2.0 * h)));
    }
  return worst;
}

/// Node degrees, pair overlaps and intersection sizes by enumerating every
/// node pair and every hyperedge pair.
struct Measures {
  std::vector<std::uint32_t> degrees;
  std::multiset<std::uint32_t> overlaps;
  std::multiset<std::uint32_t> intersections;
};

inline Measures enumerate_measures(std::size_t num_nodes, const std::vector<NodeSet>& edges) {
  Measures m;
  m.degrees.assign(num_nodes, 0);
  for (const auto& e : edges)
    for (auto v : e) ++m.degrees[v];
  for (NodeId u = 0; u < num_nodes; ++u)
    for (NodeId v = u + 1; v < num_nodes; ++v) {
      std::uint32_t c = 0;
      for (const auto& e : edges) c += (e.contains(u) && e.contains(v)) ? 1 : 0;
      if (c > 0) m.overlaps.insert(c);
    }
  for (std::size_t i = 0; i < edges.size(); ++i)
    for (std::size_t j = i + 1; j < edges.size(); ++j) {
      std::uint32_t c = 0;
      for (auto v : edges[i]) c += edges[j].contains(v) ? 1 : 0;
      if (c > 0) m.intersections.insert(c);
    }
  return m;
}

/// Largest gap between an empirical frequency and its expectation that a
/// binomial(n, p) count exceeds with probability below ~1e-6 (z = 5).
inline double binomial_bound(std::size_t n, double p) {
  return 5.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

/// Connected components check by repeated relaxation over the clique adjacency.
inline bool connected_in_cliques(const std::vector<NodeSet>& edges, const NodeSet& s) {
  std::set<NodeId> reached{s[0]};
  for (bool grew = true; grew;) {
    grew = false;
    for (auto u : s) {
      if (reached.contains(u)) continue;
      for (const auto& e : edges) {
        if (!e.contains(u)) continue;
        bool touches = false;
        for (auto w : e) touches |= reached.contains(w);
        if (touches) {
          reached.insert(u);
          grew = true;
          break;
        }
      }
    }
  }
  return reached.size() == s.size();
}

/// True when u and v share a hyperedge.
inline bool co_member(const std::vector<NodeSet>& edges, NodeId u, NodeId v) {
  for (const auto& e : edges)
    if (e.contains(u) && e.contains(v)) return true;
  return false;
}

}  // namespace ahp::oracle
