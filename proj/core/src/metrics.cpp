#include <crtc/metrics.hpp>

#include <crtc/error.hpp>

#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace crtc::metrics {
namespace {

void require_same_length(const Labels& truth, const Labels& pred) {
  if (truth.size() != pred.size()) {
    throw DataError(DataErrc::ShapeMismatch, "label vectors differ in length: " + std::to_string(truth.size()) +
                                                 " vs " + std::to_string(pred.size()));
  }
}

std::vector<int> relabel(const Labels& labels, int& count) {
  std::map<int, int> ids;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = ids.try_emplace(labels[i], static_cast<int>(ids.size()));
    out[i] = it->second;
  }
  count = static_cast<int>(ids.size());
  return out;
}

double choose2(long long n) { return 0.5 * static_cast<double>(n) * static_cast<double>(n - 1); }

}  // namespace

std::vector<std::vector<long long>> contingency(const Labels& truth, const Labels& pred) {
  require_same_length(truth, pred);
  int kt = 0;
  int kp = 0;
  const auto t = relabel(truth, kt);
  const auto p = relabel(pred, kp);
  std::vector<std::vector<long long>> table(static_cast<std::size_t>(kt), std::vector<long long>(static_cast<std::size_t>(kp), 0));
  for (std::size_t i = 0; i < t.size(); ++i) ++table[static_cast<std::size_t>(t[i])][static_cast<std::size_t>(p[i])];
  return table;
}

// Shortest augmenting path with row/column potentials, O(n^3).
std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  if (n == 0) return {};
  for (const auto& row : cost)
    if (row.size() != n) throw DataError(DataErrc::ShapeMismatch, "solve_assignment: cost matrix is not square");
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based; column 0 is a virtual start node.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  std::vector<bool> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> result(n, -1);
  for (std::size_t j = 1; j <= n; ++j) result[match[j] - 1] = static_cast<int>(j - 1);
  return result;
}

double acc(const Labels& truth, const Labels& pred) {
  require_same_length(truth, pred);
  if (truth.empty()) return 1.0;
  const auto table = contingency(truth, pred);
  const std::size_t kt = table.size();
  const std::size_t kp = table.front().size();
  const std::size_t k = std::max(kt, kp);
  // Rows are predicted clusters, columns are classes; maximise matches.
  std::vector<std::vector<double>> cost(k, std::vector<double>(k, 0.0));
  for (std::size_t t = 0; t < kt; ++t)
    for (std::size_t p = 0; p < kp; ++p) cost[p][t] = -static_cast<double>(table[t][p]);
  const auto match = solve_assignment(cost);
  long long hits = 0;
  for (std::size_t p = 0; p < kp; ++p) {
    const auto t = static_cast<std::size_t>(match[p]);
    if (t < kt) hits += table[t][p];
  }
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double nmi(const Labels& truth, const Labels& pred) {
  require_same_length(truth, pred);
  if (truth.empty()) return 1.0;
  const auto table = contingency(truth, pred);
  const double n = static_cast<double>(truth.size());
  std::vector<double> rows(table.size(), 0.0), cols(table.front().size(), 0.0);
  for (std::size_t t = 0; t < table.size(); ++t)
    for (std::size_t p = 0; p < cols.size(); ++p) {
      rows[t] += static_cast<double>(table[t][p]);
      cols[p] += static_cast<double>(table[t][p]);
    }
  auto entropy = [n](const std::vector<double>& counts) {
    double h = 0.0;
    for (double c : counts)
      if (c > 0.0) h -= (c / n) * std::log(c / n);
    return h;
  };
  const double ht = entropy(rows);
  const double hp = entropy(cols);
  if (ht == 0.0 || hp == 0.0) return (ht == 0.0 && hp == 0.0) ? 1.0 : 0.0;
  double mi = 0.0;
  for (std::size_t t = 0; t < table.size(); ++t)
    for (std::size_t p = 0; p < cols.size(); ++p) {
      const double c = static_cast<double>(table[t][p]);
      if (c > 0.0) mi += (c / n) * std::log(c * n / (rows[t] * cols[p]));
    }
  return std::clamp(mi / std::sqrt(ht * hp), 0.0, 1.0);
}

double ari(const Labels& truth, const Labels& pred) {
  require_same_length(truth, pred);
  if (truth.size() < 2) return 1.0;
  const auto table = contingency(truth, pred);
  double index = 0.0;
  std::vector<long long> rows(table.size(), 0), cols(table.front().size(), 0);
  for (std::size_t t = 0; t < table.size(); ++t)
    for (std::size_t p = 0; p < cols.size(); ++p) {
      index += choose2(table[t][p]);
      rows[t] += table[t][p];
      cols[p] += table[t][p];
    }
  double a = 0.0;
  double b = 0.0;
  for (long long r : rows) a += choose2(r);
  for (long long c : cols) b += choose2(c);
  const double expected = a * b / choose2(static_cast<long long>(truth.size()));
  const double max_index = 0.5 * (a + b);
  const double denom = max_index - expected;
  if (denom == 0.0) return 1.0;
  return (index - expected) / denom;
}

Scores evaluate(const Labels& truth, const Labels& pred) { return {acc(truth, pred), nmi(truth, pred), ari(truth, pred)}; }

}  // namespace crtc::metrics
