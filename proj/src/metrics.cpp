#include "ahp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ahp/common.hpp"

namespace ahp {

ScoredExamples ScoredExamples::from(std::span<const double> positive, std::span<const double> negative) {
  ScoredExamples s;
  s.scores.assign(positive.begin(), positive.end());
  s.scores.insert(s.scores.end(), negative.begin(), negative.end());
  s.labels.assign(positive.size(), true);
  s.labels.insert(s.labels.end(), negative.size(), false);
  return s;
}

namespace {

void check_two_class(const ScoredExamples& s, std::size_t& n_pos, std::size_t& n_neg) {
  if (s.scores.size() != s.labels.size()) throw InvariantError("scores and labels differ in length");
  n_pos = static_cast<std::size_t>(std::count(s.labels.begin(), s.labels.end(), true));
  n_neg = s.labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw InvariantError("ranking metrics need both positive and negative examples");
}

}  // namespace

double auroc(const ScoredExamples& s) {
  std::size_t n_pos = 0, n_neg = 0;
  check_two_class(s, n_pos, n_neg);
  std::vector<std::size_t> order(s.scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.scores[a] < s.scores[b]; });

  // Sum of average (1-based) ranks of the positives.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && s.scores[order[j]] == s.scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (s.labels[order[k]]) rank_sum += avg_rank;
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

ApResult average_precision(const ScoredExamples& s) {
  std::size_t n_pos = 0, n_neg = 0;
  check_two_class(s, n_pos, n_neg);
  std::vector<std::size_t> order(s.scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.scores[a] > s.scores[b]; });
  ApResult r;
  std::size_t hits = 0;
  double total = 0.0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (rank > 0 && s.scores[order[rank]] == s.scores[order[rank - 1]]) r.had_ties = true;
    if (s.labels[order[rank]]) {
      ++hits;
      total += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  r.value = total / static_cast<double>(n_pos);
  return r;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw InvariantError("ks_statistic of an empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  // Evaluate both CDFs right after each distinct value.
  while (i < x.size() || j < y.size()) {
    double t;
    if (j == y.size() || (i < x.size() && x[i] <= y[j]))
      t = x[i];
    else
      t = y[j];
    while (i < x.size() && x[i] <= t) ++i;
    while (j < y.size() && y[j] <= t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

}  // namespace ahp
