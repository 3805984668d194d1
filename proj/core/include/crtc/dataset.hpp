#pragma once

#include <crtc/matrix.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace crtc {

// N x V availability mask. A set cell (1) means the instance is missing in
// that view, a cleared cell (0) means it is available.
class Mask {
 public:
  Mask() = default;
  Mask(Index n, Index views) : n_(n), views_(views), cells_(n * views, 0) {}

  static Mask from_matrix(const Matrix& m);  // throws DataError(NonBinaryMask)
  Matrix to_matrix() const;

  Index rows() const noexcept { return n_; }
  Index views() const noexcept { return views_; }

  bool missing(Index i, Index v) const { return cells_[i * views_ + v] != 0; }
  bool available(Index i, Index v) const { return !missing(i, v); }
  void set_missing(Index i, Index v, bool missing) { cells_[i * views_ + v] = missing ? 1 : 0; }

  Index missing_count() const;
  Index available_in_row(Index i) const;
  bool complete() const { return missing_count() == 0; }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  Index n_ = 0;
  Index views_ = 0;
  std::vector<std::uint8_t> cells_;
};

// Per-view feature matrices (N rows each, D_v columns), the availability mask,
// the number of clusters, and optional ground-truth labels used only for
// evaluation. Cells under a set mask bit hold placeholder values; nothing in
// the training path reads them.
class MultiViewDataset {
 public:
  MultiViewDataset(std::vector<Matrix> views, Mask mask, int n_clusters,
                   std::optional<Labels> labels = std::nullopt);

  Index n() const noexcept { return n_; }
  Index n_views() const noexcept { return views_.size(); }
  Index dim(Index v) const { return static_cast<Index>(views_[v].cols()); }
  int n_clusters() const noexcept { return n_clusters_; }

  const Matrix& view(Index v) const { return views_[v]; }
  const std::vector<Matrix>& views() const noexcept { return views_; }
  const Mask& mask() const noexcept { return mask_; }
  const std::optional<Labels>& labels() const noexcept { return labels_; }

  bool missing(Index i, Index v) const { return mask_.missing(i, v); }
  bool available(Index i, Index v) const { return mask_.available(i, v); }

  // Ascending ids of instances available in view v.
  std::vector<Index> available_in(Index v) const;
  // Column mean of the available rows of view v.
  RowVector available_mean(Index v) const;

  MultiViewDataset with_mask(Mask mask) const;
  MultiViewDataset with_views(std::vector<Matrix> views) const;

  // Views with every missing cell replaced by the view's available mean.
  std::vector<Matrix> mean_filled_views() const;
  // Views with every missing cell replaced by zeros.
  std::vector<Matrix> zero_filled_views() const;

 private:
  void validate() const;

  Index n_ = 0;
  std::vector<Matrix> views_;
  Mask mask_;
  int n_clusters_ = 0;
  std::optional<Labels> labels_;
};

// n_clusters == 0 infers C from the labels (max label + 1).
MultiViewDataset load_dataset(const std::vector<std::filesystem::path>& view_paths,
                              const std::optional<std::filesystem::path>& mask_path,
                              const std::optional<std::filesystem::path>& labels_path,
                              int n_clusters = 0);

struct MaskProtocol {
  enum class Kind { MissingRate, PairedRate };
  Kind kind = Kind::PairedRate;
  double p = 0.0;
  std::uint64_t seed = 0;
};

// MissingRate: fraction p of all (instance, view) cells become missing, never
// emptying a row. PairedRate (V = 2 only): exactly round(p * N) instances keep
// both views and every other instance keeps one view chosen uniformly.
// Feature values are never touched.
MultiViewDataset apply_mask_protocol(const MultiViewDataset& dataset, const MaskProtocol& protocol);

struct BlobOptions {
  Index n_per_cluster = 100;
  int clusters = 3;
  Index views = 2;
  std::vector<Index> dims{20, 20};
  double sigma = 0.05;
  std::uint64_t seed = 0;
};

// Cluster c has latent code e_c; view v maps it through a fixed random
// Gaussian matrix and adds isotropic noise of standard deviation sigma.
// The returned dataset is complete and labelled.
MultiViewDataset synth_blobs(const BlobOptions& options);

}  // namespace crtc
