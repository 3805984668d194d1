#include <crtc/clustering.hpp>

#include <crtc/error.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace crtc {
namespace {

// Nearest centre per row (ties to the lower index) and the summed squared distance.
double assign_rows(const Matrix& x, const Matrix& centers, Labels& labels) {
  double inertia = 0.0;
  labels.resize(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (Eigen::Index c = 0; c < centers.rows(); ++c) {
      const double d = (x.row(i) - centers.row(c)).squaredNorm();
      if (d < best) {
        best = d;
        arg = static_cast<int>(c);
      }
    }
    labels[static_cast<std::size_t>(i)] = arg;
    inertia += best;
  }
  return inertia;
}

Matrix plus_plus_seeds(const Matrix& x, int clusters, std::mt19937_64& rng) {
  const Eigen::Index n = x.rows();
  Matrix centers(clusters, x.cols());
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  centers.row(0) = x.row(pick(rng));
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) d2[static_cast<std::size_t>(i)] = (x.row(i) - centers.row(0)).squaredNorm();
  for (int c = 1; c < clusters; ++c) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    Eigen::Index chosen = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      chosen = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= d2[static_cast<std::size_t>(i)];
        if (target < 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = pick(rng);
    }
    centers.row(c) = x.row(chosen);
    for (Eigen::Index i = 0; i < n; ++i)
      d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], (x.row(i) - centers.row(c)).squaredNorm());
  }
  return centers;
}

}  // namespace

KMeansResult kmeans_single(const Matrix& x, int clusters, std::uint64_t seed, int max_iter, double tol) {
  if (clusters < 1) throw DataError(DataErrc::InvalidArgument, "kmeans: need at least one cluster");
  if (clusters > x.rows()) {
    throw DataError(DataErrc::InvalidArgument, "kmeans: " + std::to_string(clusters) + " clusters for " +
                                                   std::to_string(x.rows()) + " points");
  }
  std::mt19937_64 rng(seed);
  KMeansResult result;
  result.centers = plus_plus_seeds(x, clusters, rng);

  Labels labels;
  for (int iter = 0; iter < max_iter; ++iter) {
    assign_rows(x, result.centers, labels);
    Matrix next = Matrix::Zero(clusters, x.cols());
    std::vector<Index> counts(static_cast<std::size_t>(clusters), 0);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      next.row(labels[static_cast<std::size_t>(i)]) += x.row(i);
      ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < clusters; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        next.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
        continue;
      }
      // Empty cluster: move it onto the point farthest from its current centre.
      Eigen::Index far = 0;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double d = (x.row(i) - result.centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      next.row(c) = x.row(far);
    }
    double shift = 0.0;
    for (int c = 0; c < clusters; ++c) shift = std::max(shift, (next.row(c) - result.centers.row(c)).norm());
    result.centers = std::move(next);
    result.iterations = iter + 1;
    if (shift < tol) break;
  }
  result.inertia = assign_rows(x, result.centers, result.labels);
  return result;
}

KMeansResult kmeans(const Matrix& x, int clusters, const KMeansOptions& options) {
  if (options.restarts < 1) throw DataError(DataErrc::InvalidArgument, "kmeans: restarts must be positive");
  std::mt19937_64 seeder(options.seed);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < options.restarts; ++r) {
    KMeansResult run = kmeans_single(x, clusters, seeder(), options.max_iter, options.tol);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

Matrix soft_assign(const Matrix& h, const Matrix& centers) {
  diff::Tape tape;
  return soft_assign(tape.constant(h), tape.constant(centers)).value();
}

diff::Var soft_assign(diff::Var h, diff::Var centers) {
  return diff::row_normalize(diff::recip1p(diff::pairwise_sq_dist(h, centers)));
}

Matrix target_distribution(const Matrix& q) {
  const RowVector freq = q.colwise().sum();
  Matrix p = q.array().square().rowwise() / freq.array();
  const Eigen::VectorXd rows = p.rowwise().sum();
  p.array().colwise() /= rows.array();
  return p;
}

double loss_mc(const Matrix& p, const Matrix& q) {
  diff::Tape tape;
  return loss_mc(p, tape.constant(q)).scalar();
}

diff::Var loss_mc(const Matrix& p, diff::Var q) { return diff::kl_divergence(p, q); }

Labels hard_assign(const Matrix& q) {
  Labels r(static_cast<std::size_t>(q.rows()));
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    Eigen::Index arg = 0;
    for (Eigen::Index j = 1; j < q.cols(); ++j)
      if (q(i, j) > q(i, arg)) arg = j;
    r[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }
  return r;
}

double label_change_fraction(const Labels& before, const Labels& after) {
  if (before.size() != after.size()) throw DataError(DataErrc::ShapeMismatch, "label vectors differ in length");
  if (before.empty()) return 0.0;
  std::size_t changed = 0;
  for (std::size_t i = 0; i < before.size(); ++i) changed += before[i] != after[i] ? 1 : 0;
  return static_cast<double>(changed) / static_cast<double>(before.size());
}

}  // namespace crtc
