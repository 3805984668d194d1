#pragma once

// Independent reference implementations. Everything here is deliberately
// naive (loops, full sorts, explicit enumeration) and shares no code with
// the library beyond the data types.

#include <crtc/dataset.hpp>
#include <crtc/knn_transfer.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

using crtc::Index;
using crtc::Labels;
using crtc::Matrix;

inline double sq_dist(const Matrix& a, Index i, const Matrix& b, Index j) {
  double s = 0.0;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    const double d = a(static_cast<Eigen::Index>(i), c) - b(static_cast<Eigen::Index>(j), c);
    s += d * d;
  }
  return s;
}

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = g(rng);
  return m;
}

inline Matrix random_stochastic(Index rows, Index cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) s += m(i, j) = u(rng);
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) /= s;
  }
  return m;
}

inline Labels random_labels(Index n, int classes, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, classes - 1);
  Labels out(n);
  for (auto& l : out) l = pick(rng);
  return out;
}

// --- metrics -----------------------------------------------------------------

// Best matched fraction over every injective relabelling of predicted ids.
inline double acc_bruteforce(const Labels& truth, const Labels& pred) {
  std::set<int> pred_ids(pred.begin(), pred.end());
  std::set<int> truth_ids(truth.begin(), truth.end());
  std::vector<int> ps(pred_ids.begin(), pred_ids.end());
  std::vector<int> ts(truth_ids.begin(), truth_ids.end());
  // Pad the class side with dummies so every predicted id gets a slot.
  int dummy = -1;
  while (ts.size() < ps.size()) ts.push_back(dummy--);
  std::sort(ts.begin(), ts.end());
  double best = 0.0;
  do {
    std::map<int, int> mapping;
    for (std::size_t a = 0; a < ps.size(); ++a) mapping[ps[a]] = ts[a];
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += mapping[pred[i]] == truth[i] ? 1 : 0;
    best = std::max(best, static_cast<double>(hits) / static_cast<double>(truth.size()));
  } while (std::next_permutation(ts.begin(), ts.end()));
  return best;
}

inline double ari_pairs(const Labels& truth, const Labels& pred) {
  // Pair enumeration: a = same/same, b = same truth only, c = same pred only, d = neither.
  double a = 0, b = 0, c = 0, d = 0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    for (std::size_t j = i + 1; j < truth.size(); ++j) {
      const bool st = truth[i] == truth[j];
      const bool sp = pred[i] == pred[j];
      if (st && sp) ++a;
      else if (st) ++b;
      else if (sp) ++c;
      else ++d;
    }
  const double n = a + b + c + d;
  const double expected = (a + b) * (a + c) / n;
  const double max_index = 0.5 * ((a + b) + (a + c));
  if (max_index == expected) return 1.0;
  return (a - expected) / (max_index - expected);
}

inline double nmi_entropy(const Labels& truth, const Labels& pred) {
  const double n = static_cast<double>(truth.size());
  std::map<int, double> pt, pp;
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    pt[truth[i]] += 1.0;
    pp[pred[i]] += 1.0;
    joint[{truth[i], pred[i]}] += 1.0;
  }
  // Counts to probabilities in one division, so a single class gives exactly 1.
  for (auto* m : {&pt, &pp})
    for (auto& [k, p] : *m) p /= n;
  for (auto& [k, p] : joint) p /= n;
  double ht = 0, hp = 0, mi = 0;
  for (auto& [k, p] : pt) ht -= p * std::log(p);
  for (auto& [k, p] : pp) hp -= p * std::log(p);
  for (auto& [k, p] : joint) mi += p * std::log(p / (pt[k.first] * pp[k.second]));
  if (ht == 0.0 && hp == 0.0) return 1.0;
  if (ht == 0.0 || hp == 0.0) return 0.0;
  return mi / std::sqrt(ht * hp);
}

// --- knn / transfer ----------------------------------------------------------

// Sort every candidate, then take the first k.
inline std::vector<Index> knn_fullsort(const Matrix& x, const std::vector<bool>& available, Index anchor, Index k) {
  std::vector<std::pair<double, Index>> all;
  for (Index j = 0; j < static_cast<Index>(x.rows()); ++j)
    if (j != anchor && available[j]) all.emplace_back(sq_dist(x, anchor, x, j), j);
  std::sort(all.begin(), all.end());
  std::vector<Index> out;
  for (Index r = 0; r < std::min<Index>(k, all.size()); ++r) out.push_back(all[r].second);
  return out;
}

struct Entry {
  std::vector<Index> neighbors;
  bool fallback = false;
};

inline std::map<std::pair<Index, Index>, Entry> transfer_bruteforce(const crtc::MultiViewDataset& ds, Index k) {
  std::map<std::pair<Index, Index>, Entry> out;
  const Index n = ds.n();
  const Index views = ds.n_views();
  auto avail = [&](Index v) {
    std::vector<bool> a(n);
    for (Index j = 0; j < n; ++j) a[j] = !ds.missing(j, v);
    return a;
  };
  for (Index i = 0; i < n; ++i)
    for (Index v = 0; v < views; ++v) {
      if (!ds.missing(i, v)) continue;
      Entry e;
      std::set<Index> seen;
      for (Index u = 0; u < views; ++u) {
        if (ds.missing(i, u)) continue;
        for (Index j : knn_fullsort(ds.view(u), avail(u), i, k))
          if (!ds.missing(j, v) && seen.insert(j).second) e.neighbors.push_back(j);
      }
      if (e.neighbors.empty()) {
        e.fallback = true;
        Matrix mean = Matrix::Zero(1, ds.view(v).cols());
        double count = 0;
        for (Index j = 0; j < n; ++j)
          if (!ds.missing(j, v)) {
            mean += ds.view(v).row(static_cast<Eigen::Index>(j));
            ++count;
          }
        mean /= count;
        std::vector<std::pair<double, Index>> all;
        for (Index j = 0; j < n; ++j)
          if (!ds.missing(j, v)) all.emplace_back(sq_dist(ds.view(v), j, mean, 0), j);
        std::sort(all.begin(), all.end());
        for (Index r = 0; r < std::min<Index>(k, all.size()); ++r) e.neighbors.push_back(all[r].second);
      }
      out[{i, v}] = e;
    }
  return out;
}

inline bool same_graph(const crtc::TransferGraph& g, const std::map<std::pair<Index, Index>, Entry>& ref) {
  if (g.size() != ref.size()) return false;
  for (const auto& [key, e] : ref) {
    if (!g.contains(key.first, key.second)) return false;
    const auto& got = g.at(key.first, key.second);
    if (got.neighbors != e.neighbors || got.fallback != e.fallback) return false;
  }
  return true;
}

// Random dataset with a random valid mask (every row keeps a view).
inline crtc::MultiViewDataset random_dataset(Index n, Index views, std::mt19937_64& rng, double missing = 0.3,
                                             Index max_dim = 4) {
  std::uniform_int_distribution<Index> dim(1, max_dim);
  std::bernoulli_distribution drop(missing);
  std::uniform_int_distribution<Index> keep(0, views - 1);
  std::vector<Matrix> xs;
  for (Index v = 0; v < views; ++v) xs.push_back(random_matrix(n, dim(rng), rng));
  crtc::Mask mask(n, views);
  for (Index i = 0; i < n; ++i) {
    for (Index v = 0; v < views; ++v) mask.set_missing(i, v, drop(rng));
    if (mask.available_in_row(i) == 0) mask.set_missing(i, keep(rng), false);
  }
  return crtc::MultiViewDataset(std::move(xs), std::move(mask), 2);
}

// --- projection --------------------------------------------------------------

// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Returns eigenvalues
// descending with matching eigenvector columns.
inline std::pair<std::vector<double>, Matrix> jacobi_eigen(Matrix a) {
  const Eigen::Index n = a.rows();
  Matrix vecs = Matrix::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = vecs(k, p), vkq = vecs(k, q);
          vecs(k, p) = c * vkp - s * vkq;
          vecs(k, q) = s * vkp + c * vkq;
        }
      }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return a(x, x) > a(y, y); });
  std::vector<double> values;
  Matrix sorted(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    values.push_back(a(order[static_cast<std::size_t>(c)], order[static_cast<std::size_t>(c)]));
    sorted.col(c) = vecs.col(order[static_cast<std::size_t>(c)]);
  }
  return {values, sorted};
}

}  // namespace oracle
