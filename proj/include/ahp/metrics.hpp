/**
 * @file metrics.hpp
 * @brief AUROC, average precision and the two-sample Kolmogorov D-statistic.
 */
#pragma once

#include <span>
#include <vector>

namespace ahp {

/// Parallel score/label lists; label true means positive.
struct ScoredExamples {
  std::vector<double> scores;
  std::vector<bool> labels;

  static ScoredExamples from(std::span<const double> positive, std::span<const double> negative);
};

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Tie-corrected rank-sum, O(n log n).
double auroc(const ScoredExamples& s);

struct ApResult {
  double value = 0.0;
  bool had_ties = false;  // equal scores were ordered by input position
};

/// Mean over positives of the precision at each positive's rank in
/// descending score order (no interpolation).
ApResult average_precision(const ScoredExamples& s);

/// sup over t of |F_a(t) - F_b(t)| for the empirical CDFs.
double ks_statistic(std::span<const double> a, std::span<const double> b);

}  // namespace ahp
