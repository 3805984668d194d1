#include "oracles.hpp"

#include <crtc/clustering.hpp>
#include <crtc/error.hpp>

#include <doctest.h>

#include <cmath>

using namespace crtc;

namespace {

Matrix soft_assign_oracle(const Matrix& h, const Matrix& mu) {
  Matrix q(h.rows(), mu.rows());
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    double z = 0.0;
    for (Eigen::Index j = 0; j < mu.rows(); ++j) {
      double d = 0.0;
      for (Eigen::Index c = 0; c < h.cols(); ++c) d += (h(i, c) - mu(j, c)) * (h(i, c) - mu(j, c));
      q(i, j) = 1.0 / (1.0 + d);
      z += q(i, j);
    }
    for (Eigen::Index j = 0; j < mu.rows(); ++j) q(i, j) /= z;
  }
  return q;
}

}  // namespace

TEST_SUITE("clustering") {

TEST_CASE("k-means with one point per cluster") {
  Matrix x(3, 2);
  x << 0, 0, 5, 5, -3, 4;
  const auto r = kmeans(x, 3, {});
  CHECK(r.inertia == 0.0);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(r.centers.row(r.labels[static_cast<std::size_t>(i)]) == x.row(i));
}

TEST_CASE("k-means finds pair midpoints") {
  Matrix x(4, 1);
  x << 0, 2, 100, 102;
  const auto r = kmeans(x, 2, {});
  std::vector<double> c{r.centers(0, 0), r.centers(1, 0)};
  std::sort(c.begin(), c.end());
  CHECK(c[0] == 1.0);
  CHECK(c[1] == 101.0);
  CHECK(r.inertia == 4.0);
}

TEST_CASE("restarts never lose to a single run") {
  std::mt19937_64 rng(1);
  const Matrix x = oracle::random_matrix(120, 3, rng);
  KMeansOptions o;
  o.seed = 4;
  const auto best = kmeans(x, 5, o);
  std::mt19937_64 seeder(o.seed);
  for (int r = 0; r < o.restarts; ++r) CHECK(best.inertia <= kmeans_single(x, 5, seeder()).inertia);
}

TEST_CASE("k-means rejects more clusters than points") {
  CHECK_THROWS_AS(kmeans(Matrix::Zero(2, 2), 3, {}), DataError);
}

TEST_CASE("soft assignment") {
  Matrix mu(2, 1);
  mu << 0, 1;
  Matrix h(1, 1);
  h << 0;
  const Matrix q = soft_assign(h, mu);
  CHECK(q(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(q(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  Matrix mid(1, 1);
  mid << 0.5;
  const Matrix u = soft_assign(mid, mu);
  CHECK(u(0, 0) == u(0, 1));

  std::mt19937_64 rng(2);
  const Matrix hr = oracle::random_matrix(10, 4, rng);
  const Matrix mr = oracle::random_matrix(3, 4, rng);
  CHECK((soft_assign(hr, mr) - soft_assign_oracle(hr, mr)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("target distribution") {
  SUBCASE("one-hot is a fixed point") {
    Matrix q(3, 2);
    q << 1, 0, 0, 1, 1, 0;
    CHECK(target_distribution(q) == q);
  }
  SUBCASE("hand value") {
    Matrix q(2, 2);
    q << 0.9, 0.1, 0.1, 0.9;
    CHECK(target_distribution(q)(0, 0) == doctest::Approx(0.81 / 0.82).epsilon(1e-12));
  }
  SUBCASE("rows sum to one and sharpen") {
    std::mt19937_64 rng(3);
    const Matrix q = oracle::random_stochastic(40, 4, rng);
    const Matrix p = target_distribution(q);
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
      CHECK(std::abs(p.row(i).sum() - 1.0) < 1e-9);
      CHECK(p.minCoeff() >= 0.0);
    }
    // Per-row sharpening can fail when the winning column carries much more
    // mass than the others; on average the target is more confident.
    CHECK(p.rowwise().maxCoeff().mean() > q.rowwise().maxCoeff().mean());
  }
  SUBCASE("permuting columns permutes the target") {
    std::mt19937_64 rng(4);
    const Matrix q = oracle::random_stochastic(10, 3, rng);
    Matrix qp(10, 3);
    qp << q.col(2), q.col(0), q.col(1);
    const Matrix p = target_distribution(q);
    const Matrix pp = target_distribution(qp);
    CHECK((pp.col(0) - p.col(2)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((pp.col(1) - p.col(0)).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("sharpening with balanced clusters") {
  // Equal column mass reduces the target to squaring and renormalising.
  Matrix q(4, 2);
  q << 0.7, 0.3, 0.3, 0.7, 0.6, 0.4, 0.4, 0.6;
  const Matrix p = target_distribution(q);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(p.row(i).maxCoeff() >= q.row(i).maxCoeff());
}

TEST_CASE("clustering loss") {
  std::mt19937_64 rng(5);
  const Matrix q = oracle::random_stochastic(6, 3, rng);
  CHECK(loss_mc(q, q) == doctest::Approx(0.0).epsilon(1e-15));
  Matrix p(1, 2);
  p << 1, 0;
  Matrix u(1, 2);
  u << 0.5, 0.5;
  CHECK(loss_mc(p, u) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  for (int t = 0; t < 1000; ++t) {
    const Matrix a = oracle::random_stochastic(2, 3, rng);
    const Matrix b = oracle::random_stochastic(2, 3, rng);
    CHECK(loss_mc(a, b) >= 0.0);
  }
}

TEST_CASE("clustering loss passes the finite-difference check") {
  std::mt19937_64 rng(6);
  diff::ParamStore store;
  store.add("h", oracle::random_matrix(8, 3, rng));
  store.add("mu", oracle::random_matrix(3, 3, rng));
  const Matrix p = target_distribution(soft_assign(store.value("h"), store.value("mu")));
  const auto report = diff::check_gradients(store, [&](diff::Tape& t) {
    return loss_mc(p, soft_assign(t.param(store, "h"), t.param(store, "mu")));
  });
  INFO(report.worst);
  CHECK(report.ok);
}

TEST_CASE("hard assignment") {
  Matrix q(3, 3);
  q << 0.2, 0.7, 0.1, 0.5, 0.5, 0.0, 0.1, 0.1, 0.8;
  CHECK(hard_assign(q) == Labels{1, 0, 2});
  // Strictly monotone row transforms keep the argmax.
  const Matrix t = (q.array() * 3.0 + 1.0).exp().matrix();
  CHECK(hard_assign(t) == hard_assign(q));
  CHECK(label_change_fraction({0, 1, 2, 2}, {0, 2, 2, 1}) == 0.5);
  CHECK_THROWS_AS(label_change_fraction({0}, {0, 1}), DataError);
}

}  // TEST_SUITE
