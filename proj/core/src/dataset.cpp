#include <crtc/dataset.hpp>

#include <crtc/csv.hpp>
#include <crtc/error.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace crtc {

Mask Mask::from_matrix(const Matrix& m) {
  Mask mask(static_cast<Index>(m.rows()), static_cast<Index>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index v = 0; v < m.cols(); ++v) {
      const double x = m(i, v);
      if (x != 0.0 && x != 1.0) {
        throw DataError(DataErrc::NonBinaryMask, "mask cell (" + std::to_string(i) + "," +
                                                     std::to_string(v) + ") is " +
                                                     csv::format_double(x) + ", expected 0 or 1");
      }
      mask.set_missing(static_cast<Index>(i), static_cast<Index>(v), x == 1.0);
    }
  }
  return mask;
}

Matrix Mask::to_matrix() const {
  Matrix m(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(views_));
  for (Index i = 0; i < n_; ++i)
    for (Index v = 0; v < views_; ++v) m(i, v) = missing(i, v) ? 1.0 : 0.0;
  return m;
}

Index Mask::missing_count() const {
  return static_cast<Index>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
}

Index Mask::available_in_row(Index i) const {
  Index count = 0;
  for (Index v = 0; v < views_; ++v) count += available(i, v) ? 1 : 0;
  return count;
}

MultiViewDataset::MultiViewDataset(std::vector<Matrix> views, Mask mask, int n_clusters,
                                   std::optional<Labels> labels)
    : views_(std::move(views)), mask_(std::move(mask)), n_clusters_(n_clusters),
      labels_(std::move(labels)) {
  if (views_.empty()) throw DataError(DataErrc::InvalidArgument, "dataset needs at least one view");
  n_ = static_cast<Index>(views_.front().rows());
  validate();
}

void MultiViewDataset::validate() const {
  for (Index v = 0; v < views_.size(); ++v) {
    if (static_cast<Index>(views_[v].rows()) != n_) {
      throw DataError(DataErrc::RowCountMismatch,
                      "view " + std::to_string(v) + " has " + std::to_string(views_[v].rows()) +
                          " rows, view 0 has " + std::to_string(n_));
    }
    if (views_[v].cols() == 0) {
      throw DataError(DataErrc::ShapeMismatch, "view " + std::to_string(v) + " has no columns");
    }
  }
  if (mask_.rows() != n_ || mask_.views() != views_.size()) {
    throw DataError(DataErrc::RowCountMismatch,
                    "mask is " + std::to_string(mask_.rows()) + "x" + std::to_string(mask_.views()) +
                        ", expected " + std::to_string(n_) + "x" + std::to_string(views_.size()));
  }
  for (Index i = 0; i < n_; ++i) {
    if (mask_.available_in_row(i) == 0) {
      throw DataError(DataErrc::AllMissingRow,
                      "instance " + std::to_string(i) + " is missing in every view");
    }
  }
  if (n_clusters_ < 1) throw DataError(DataErrc::InvalidArgument, "n_clusters must be positive");
  if (labels_) {
    if (labels_->size() != n_) {
      throw DataError(DataErrc::RowCountMismatch, "labels have " + std::to_string(labels_->size()) +
                                                      " entries, expected " + std::to_string(n_));
    }
    for (Index i = 0; i < n_; ++i) {
      const int y = (*labels_)[i];
      if (y < 0 || y >= n_clusters_) {
        throw DataError(DataErrc::BadLabel, "label " + std::to_string(y) + " at line " +
                                                std::to_string(i + 1) + " outside [0, " +
                                                std::to_string(n_clusters_) + ")");
      }
    }
  }
}

std::vector<Index> MultiViewDataset::available_in(Index v) const {
  std::vector<Index> ids;
  ids.reserve(n_);
  for (Index i = 0; i < n_; ++i)
    if (available(i, v)) ids.push_back(i);
  return ids;
}

RowVector MultiViewDataset::available_mean(Index v) const {
  RowVector mean = RowVector::Zero(views_[v].cols());
  Index count = 0;
  for (Index i = 0; i < n_; ++i) {
    if (!available(i, v)) continue;
    mean += views_[v].row(static_cast<Eigen::Index>(i));
    ++count;
  }
  if (count > 0) mean /= static_cast<double>(count);
  return mean;
}

MultiViewDataset MultiViewDataset::with_mask(Mask mask) const {
  return MultiViewDataset(views_, std::move(mask), n_clusters_, labels_);
}

MultiViewDataset MultiViewDataset::with_views(std::vector<Matrix> views) const {
  return MultiViewDataset(std::move(views), mask_, n_clusters_, labels_);
}

std::vector<Matrix> MultiViewDataset::mean_filled_views() const {
  std::vector<Matrix> out = views_;
  for (Index v = 0; v < views_.size(); ++v) {
    const RowVector mean = available_mean(v);
    for (Index i = 0; i < n_; ++i)
      if (missing(i, v)) out[v].row(static_cast<Eigen::Index>(i)) = mean;
  }
  return out;
}

std::vector<Matrix> MultiViewDataset::zero_filled_views() const {
  std::vector<Matrix> out = views_;
  for (Index v = 0; v < views_.size(); ++v)
    for (Index i = 0; i < n_; ++i)
      if (missing(i, v)) out[v].row(static_cast<Eigen::Index>(i)).setZero();
  return out;
}

MultiViewDataset load_dataset(const std::vector<std::filesystem::path>& view_paths,
                              const std::optional<std::filesystem::path>& mask_path,
                              const std::optional<std::filesystem::path>& labels_path,
                              int n_clusters) {
  if (view_paths.empty()) throw DataError(DataErrc::InvalidArgument, "no view files given");
  std::vector<Matrix> views;
  views.reserve(view_paths.size());
  for (const auto& p : view_paths) views.push_back(csv::read_matrix(p));
  const auto n = static_cast<Index>(views.front().rows());
  for (Index v = 1; v < views.size(); ++v) {
    if (static_cast<Index>(views[v].rows()) != n) {
      throw DataError(DataErrc::RowCountMismatch,
                      view_paths[v].string() + " has " + std::to_string(views[v].rows()) +
                          " rows, " + view_paths[0].string() + " has " + std::to_string(n));
    }
  }

  Mask mask(n, views.size());
  if (mask_path) {
    const Matrix m = csv::read_matrix(*mask_path);
    if (static_cast<Index>(m.rows()) != n || static_cast<Index>(m.cols()) != views.size()) {
      throw DataError(DataErrc::RowCountMismatch,
                      mask_path->string() + " is " + std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()) + ", expected " + std::to_string(n) + "x" +
                          std::to_string(views.size()));
    }
    mask = Mask::from_matrix(m);
  }

  std::optional<Labels> labels;
  if (labels_path) {
    labels = csv::read_labels(*labels_path);
    if (n_clusters == 0 && !labels->empty())
      n_clusters = *std::max_element(labels->begin(), labels->end()) + 1;
  }
  if (n_clusters <= 0) {
    throw DataError(DataErrc::InvalidArgument,
                    "number of clusters unknown: pass it explicitly or provide labels");
  }
  return MultiViewDataset(std::move(views), std::move(mask), n_clusters, std::move(labels));
}

MultiViewDataset apply_mask_protocol(const MultiViewDataset& dataset, const MaskProtocol& protocol) {
  if (!(protocol.p >= 0.0 && protocol.p < 1.0)) {
    throw DataError(DataErrc::InvalidArgument, "mask rate must lie in [0, 1)");
  }
  if (!dataset.mask().complete()) {
    throw DataError(DataErrc::InvalidArgument, "mask protocols apply to complete datasets only");
  }
  const Index n = dataset.n();
  const Index views = dataset.n_views();
  std::mt19937_64 rng(protocol.seed);
  Mask mask(n, views);

  if (protocol.kind == MaskProtocol::Kind::PairedRate) {
    if (views != 2) {
      throw DataError(DataErrc::InvalidArgument,
                      "paired-rate masking needs exactly 2 views, got " + std::to_string(views));
    }
    const auto paired = static_cast<Index>(std::llround(protocol.p * static_cast<double>(n)));
    std::vector<Index> order(n);
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::bernoulli_distribution coin(0.5);
    for (Index r = paired; r < n; ++r) mask.set_missing(order[r], coin(rng) ? 1 : 0, true);
    return dataset.with_mask(std::move(mask));
  }

  const Index cells = n * views;
  const auto target = static_cast<Index>(std::llround(protocol.p * static_cast<double>(cells)));
  if (target > n * (views - 1)) {
    throw DataError(DataErrc::InvalidArgument,
                    "missing rate " + csv::format_double(protocol.p) + " cannot keep one view per instance with " +
                        std::to_string(views) + " views");
  }
  std::vector<Index> order(cells);
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Index> remaining(n, views);
  Index removed = 0;
  for (Index cell : order) {
    if (removed == target) break;
    const Index i = cell / views;
    if (remaining[i] <= 1) continue;
    mask.set_missing(i, cell % views, true);
    --remaining[i];
    ++removed;
  }
  return dataset.with_mask(std::move(mask));
}

MultiViewDataset synth_blobs(const BlobOptions& options) {
  if (options.n_per_cluster == 0 || options.clusters < 1 || options.views == 0) {
    throw DataError(DataErrc::InvalidArgument, "synth_blobs: sizes must be positive");
  }
  if (options.dims.size() != options.views) {
    throw DataError(DataErrc::InvalidArgument, "synth_blobs: need one dimension per view");
  }
  if (std::any_of(options.dims.begin(), options.dims.end(), [](Index d) { return d == 0; })) {
    throw DataError(DataErrc::InvalidArgument, "synth_blobs: view dimensions must be positive");
  }
  if (!(options.sigma >= 0.0)) {
    throw DataError(DataErrc::InvalidArgument, "synth_blobs: sigma must be non-negative");
  }

  const auto clusters = static_cast<Index>(options.clusters);
  const Index n = options.n_per_cluster * clusters;
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Cluster centres of view v are the columns of a random map; redraw maps whose
  // closest pair of centres sits within 10 noise radii.
  std::vector<Matrix> centers;
  for (Index v = 0; v < options.views; ++v) {
    const auto dim = static_cast<Eigen::Index>(options.dims[v]);
    const double min_gap = 10.0 * options.sigma * std::sqrt(static_cast<double>(dim));
    Matrix best;
    double best_gap = -1.0;
    for (int attempt = 0; attempt < 100 && best_gap < min_gap; ++attempt) {
      Matrix c(static_cast<Eigen::Index>(clusters), dim);
      for (Eigen::Index r = 0; r < c.rows(); ++r)
        for (Eigen::Index k = 0; k < dim; ++k) c(r, k) = gauss(rng);
      double gap = std::numeric_limits<double>::infinity();
      for (Eigen::Index a = 0; a < c.rows(); ++a)
        for (Eigen::Index b = a + 1; b < c.rows(); ++b) gap = std::min(gap, (c.row(a) - c.row(b)).norm());
      if (gap > best_gap) {
        best_gap = gap;
        best = std::move(c);
      }
    }
    centers.push_back(std::move(best));
  }

  Labels labels(n);
  for (Index i = 0; i < n; ++i) labels[i] = static_cast<int>(i % clusters);
  std::shuffle(labels.begin(), labels.end(), rng);

  std::vector<Matrix> views;
  for (Index v = 0; v < options.views; ++v) {
    Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(options.dims[v]));
    for (Index i = 0; i < n; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      x.row(row) = centers[v].row(labels[i]);
      if (options.sigma > 0.0)
        for (Eigen::Index k = 0; k < x.cols(); ++k) x(row, k) += options.sigma * gauss(rng);
    }
    views.push_back(std::move(x));
  }
  return MultiViewDataset(std::move(views), Mask(n, options.views), options.clusters, std::move(labels));
}

}  // namespace crtc
