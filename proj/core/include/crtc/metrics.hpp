#pragma once

#include <crtc/matrix.hpp>

#include <vector>

namespace crtc::metrics {

// Counts n[t][p] after relabelling both sides to 0..K-1 in order of first appearance.
std::vector<std::vector<long long>> contingency(const Labels& truth, const Labels& pred);

// Minimum-cost perfect assignment on a square cost matrix; result[row] = column.
std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost);

// Clustering accuracy under the best one-to-one cluster-to-class matching.
double acc(const Labels& truth, const Labels& pred);
// Mutual information over the geometric mean of the two entropies.
double nmi(const Labels& truth, const Labels& pred);
// Adjusted Rand index (pair counting with expected-index correction).
double ari(const Labels& truth, const Labels& pred);

struct Scores {
  double acc = 0.0;
  double nmi = 0.0;
  double ari = 0.0;
};

Scores evaluate(const Labels& truth, const Labels& pred);

}  // namespace crtc::metrics
