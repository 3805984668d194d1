#pragma once

#include <crtc/dataset.hpp>
#include <crtc/matrix.hpp>

#include <algorithm>
#include <filesystem>
#include <map>
#include <span>
#include <utility>
#include <vector>

namespace crtc {

// Neighbour set transferred to one missing (instance, view) cell.
struct TransferEntry {
  std::vector<Index> neighbors;  // all available in the target view, no duplicates, never the anchor
  bool fallback = false;         // set when no source view contributed a usable neighbour
};

// Keyed by (instance, target view); iteration order is instance-major.
class TransferGraph {
 public:
  using Key = std::pair<Index, Index>;

  TransferGraph() = default;
  explicit TransferGraph(Index n_views) : by_view_(n_views) {}

  void insert(Index i, Index v, TransferEntry entry);

  bool empty() const noexcept { return entries_.empty(); }
  Index size() const noexcept { return entries_.size(); }
  bool contains(Index i, Index v) const { return entries_.count({i, v}) != 0; }
  const TransferEntry& at(Index i, Index v) const;
  const std::map<Key, TransferEntry>& entries() const noexcept { return entries_; }

  // Ascending ids of instances that have an entry in view v.
  const std::vector<Index>& missing_in_view(Index v) const { return by_view_[v]; }
  Index n_views() const noexcept { return by_view_.size(); }

  friend bool operator==(const TransferGraph& a, const TransferGraph& b) {
    return a.entries_.size() == b.entries_.size() &&
           std::equal(a.entries_.begin(), a.entries_.end(), b.entries_.begin(), [](const auto& x, const auto& y) {
             return x.first == y.first && x.second.neighbors == y.second.neighbors &&
                    x.second.fallback == y.second.fallback;
           });
  }

 private:
  std::map<Key, TransferEntry> entries_;
  std::vector<std::vector<Index>> by_view_;
};

// Squared Euclidean distances, result(q, c) = ||rows[query[q]] - rows[candidates[c]]||^2.
Matrix pairwise_sq_distances(const Matrix& rows, std::span<const Index> query_ids,
                             std::span<const Index> candidate_ids);

// The k instances available in `view` closest to `anchor` (anchor excluded),
// ordered by distance then by instance id. Throws if the anchor is missing.
std::vector<Index> knn_in_view(const MultiViewDataset& dataset, Index view, Index anchor, Index k);

// Relation transfer: for every missing (i, v) merge the k-neighbourhoods of i in
// each view where it is available, keeping only neighbours available in v.
TransferGraph build_transfer_graph(const MultiViewDataset& dataset, Index k);

// Debug dump, one line per entry: i,v,count,fallback,neighbour ids...
void write_transfer_graph(const std::filesystem::path& path, const TransferGraph& graph);

}  // namespace crtc
