#pragma once

#include <crtc/diff.hpp>
#include <crtc/matrix.hpp>

#include <cstdint>

namespace crtc {

struct KMeansOptions {
  int restarts = 20;
  int max_iter = 300;
  double tol = 1e-6;  // stop once no centre moves farther than this
  std::uint64_t seed = 0;
};

struct KMeansResult {
  Matrix centers;
  Labels labels;
  double inertia = 0.0;
  int iterations = 0;
};

// One k-means++ seeded Lloyd run.
KMeansResult kmeans_single(const Matrix& x, int clusters, std::uint64_t seed, int max_iter = 300, double tol = 1e-6);
// Lowest-inertia result over options.restarts runs. Throws if clusters > rows.
KMeansResult kmeans(const Matrix& x, int clusters, const KMeansOptions& options);

// Student's t (one degree of freedom) soft assignments of rows of h to centres.
Matrix soft_assign(const Matrix& h, const Matrix& centers);
diff::Var soft_assign(diff::Var h, diff::Var centers);

// Sharpened, frequency-normalised target distribution.
Matrix target_distribution(const Matrix& q);

// KL(P || Q) summed over rows.
double loss_mc(const Matrix& p, const Matrix& q);
diff::Var loss_mc(const Matrix& p, diff::Var q);

// Row-wise argmax, ties to the lowest column.
Labels hard_assign(const Matrix& q);

// Fraction of positions where the two labelings differ.
double label_change_fraction(const Labels& before, const Labels& after);

}  // namespace crtc
