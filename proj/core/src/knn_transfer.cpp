#include <crtc/knn_transfer.hpp>

#include <crtc/error.hpp>

#include <algorithm>
#include <fstream>
#include <string>

namespace crtc {
namespace {

struct Candidate {
  double dist;
  Index id;
  bool operator<(const Candidate& o) const { return dist < o.dist || (dist == o.dist && id < o.id); }
};

// Sequential accumulation so results do not depend on vector width.
template <typename A, typename B>
double sq_dist(const A& a, const B& b) {
  double s = 0.0;
  for (Eigen::Index c = 0; c < a.size(); ++c) {
    const double d = a(c) - b(c);
    s += d * d;
  }
  return s;
}

// k smallest candidates in (distance, id) order.
std::vector<Index> select_k(std::vector<Candidate>& cands, Index k) {
  const Index take = std::min<Index>(k, cands.size());
  std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(take), cands.end());
  std::vector<Index> ids(take);
  for (Index r = 0; r < take; ++r) ids[r] = cands[r].id;
  return ids;
}

std::vector<Index> nearest_to_point(const MultiViewDataset& dataset, Index view, const RowVector& point,
                                    Index k, Index exclude) {
  std::vector<Candidate> cands;
  cands.reserve(dataset.n());
  const Matrix& x = dataset.view(view);
  for (Index j = 0; j < dataset.n(); ++j) {
    if (j == exclude || !dataset.available(j, view)) continue;
    cands.push_back({sq_dist(x.row(static_cast<Eigen::Index>(j)), point), j});
  }
  return select_k(cands, k);
}

}  // namespace

void TransferGraph::insert(Index i, Index v, TransferEntry entry) {
  if (v >= by_view_.size()) by_view_.resize(v + 1);
  auto [it, inserted] = entries_.insert_or_assign({i, v}, std::move(entry));
  (void)it;
  if (inserted) {
    auto& ids = by_view_[v];
    ids.insert(std::upper_bound(ids.begin(), ids.end(), i), i);
  }
}

const TransferEntry& TransferGraph::at(Index i, Index v) const {
  auto it = entries_.find({i, v});
  if (it == entries_.end()) {
    throw DataError(DataErrc::InvalidArgument,
                    "no transfer entry for instance " + std::to_string(i) + " in view " + std::to_string(v));
  }
  return it->second;
}

Matrix pairwise_sq_distances(const Matrix& rows, std::span<const Index> query_ids,
                             std::span<const Index> candidate_ids) {
  Matrix out(static_cast<Eigen::Index>(query_ids.size()), static_cast<Eigen::Index>(candidate_ids.size()));
  for (Index q = 0; q < query_ids.size(); ++q) {
    const auto qr = rows.row(static_cast<Eigen::Index>(query_ids[q]));
    for (Index c = 0; c < candidate_ids.size(); ++c)
      out(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(c)) =
          sq_dist(qr, rows.row(static_cast<Eigen::Index>(candidate_ids[c])));
  }
  return out;
}

std::vector<Index> knn_in_view(const MultiViewDataset& dataset, Index view, Index anchor, Index k) {
  if (view >= dataset.n_views() || anchor >= dataset.n()) {
    throw DataError(DataErrc::InvalidArgument, "knn_in_view: index out of range");
  }
  if (dataset.missing(anchor, view)) {
    throw DataError(DataErrc::InvalidArgument, "knn_in_view: instance " + std::to_string(anchor) +
                                                   " is missing in view " + std::to_string(view));
  }
  const RowVector point = dataset.view(view).row(static_cast<Eigen::Index>(anchor));
  return nearest_to_point(dataset, view, point, k, anchor);
}

TransferGraph build_transfer_graph(const MultiViewDataset& dataset, Index k) {
  if (k == 0) throw DataError(DataErrc::InvalidArgument, "build_transfer_graph: k must be at least 1");
  const Index n_views = dataset.n_views();
  TransferGraph graph(n_views);
  std::vector<RowVector> view_means(n_views);
  std::vector<bool> have_mean(n_views, false);

  for (Index i = 0; i < dataset.n(); ++i) {
    std::vector<std::vector<Index>> source_knn(n_views);
    for (Index u = 0; u < n_views; ++u)
      if (dataset.available(i, u)) source_knn[u] = knn_in_view(dataset, u, i, k);

    for (Index v = 0; v < n_views; ++v) {
      if (dataset.available(i, v)) continue;
      TransferEntry entry;
      for (Index u = 0; u < n_views; ++u) {
        for (Index j : source_knn[u]) {
          if (dataset.missing(j, v)) continue;
          if (std::find(entry.neighbors.begin(), entry.neighbors.end(), j) == entry.neighbors.end())
            entry.neighbors.push_back(j);
        }
      }
      if (entry.neighbors.empty()) {
        if (!have_mean[v]) {
          view_means[v] = dataset.available_mean(v);
          have_mean[v] = true;
        }
        entry.neighbors = nearest_to_point(dataset, v, view_means[v], k, i);
        entry.fallback = true;
      }
      graph.insert(i, v, std::move(entry));
    }
  }
  return graph;
}

void write_transfer_graph(const std::filesystem::path& path, const TransferGraph& graph) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(DataErrc::Io, "cannot write " + path.string());
  for (const auto& [key, entry] : graph.entries()) {
    out << key.first << ',' << key.second << ',' << entry.neighbors.size() << ',' << (entry.fallback ? 1 : 0);
    for (Index j : entry.neighbors) out << ',' << j;
    out << '\n';
  }
}

}  // namespace crtc
