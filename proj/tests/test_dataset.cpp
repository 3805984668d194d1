#include "helpers.hpp"
#include "oracles.hpp"

#include <crtc/clustering.hpp>
#include <crtc/csv.hpp>
#include <crtc/dataset.hpp>
#include <crtc/error.hpp>
#include <crtc/metrics.hpp>

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace crtc;

namespace {

DataErrc load_error(const std::vector<std::filesystem::path>& views, std::optional<std::filesystem::path> mask,
                    std::optional<std::filesystem::path> labels = std::nullopt, int clusters = 2) {
  try {
    load_dataset(views, mask, labels, clusters);
  } catch (const DataError& e) {
    return e.code();
  }
  FAIL("expected a DataError");
  return DataErrc::Io;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("absent mask means complete") {
  testing::TempDir dir("ds");
  testing::write_file(dir / "a.csv", "1,2\n3,4\n5,6\n7,8\n");
  testing::write_file(dir / "b.csv", "1\n2\n3\n4\n");
  const auto ds = load_dataset({dir / "a.csv", dir / "b.csv"}, std::nullopt, std::nullopt, 2);
  CHECK(ds.n() == 4);
  CHECK(ds.n_views() == 2);
  CHECK(ds.dim(0) == 2);
  CHECK(ds.dim(1) == 1);
  CHECK(ds.mask().to_matrix() == Matrix::Zero(4, 2));
  CHECK_FALSE(ds.labels().has_value());
}

TEST_CASE("load errors") {
  testing::TempDir dir("ds");
  testing::write_file(dir / "four.csv", "1\n2\n3\n4\n");
  testing::write_file(dir / "five.csv", "1\n2\n3\n4\n5\n");
  testing::write_file(dir / "bad.csv", "1\n2\nx\n4\n");
  testing::write_file(dir / "ragged.csv", "1,2\n3\n4,5\n6,7\n");
  testing::write_file(dir / "mask2.csv", "0,0\n0,2\n0,0\n0,0\n");
  testing::write_file(dir / "maskall.csv", "0,0\n1,1\n0,0\n0,0\n");
  testing::write_file(dir / "labels.txt", "0\n1\n5\n0\n");

  CHECK(load_error({dir / "four.csv", dir / "five.csv"}, std::nullopt) == DataErrc::RowCountMismatch);
  CHECK(load_error({dir / "four.csv", dir / "four.csv"}, dir / "mask2.csv") == DataErrc::NonBinaryMask);
  CHECK(load_error({dir / "four.csv", dir / "four.csv"}, dir / "maskall.csv") == DataErrc::AllMissingRow);
  CHECK(load_error({dir / "bad.csv"}, std::nullopt) == DataErrc::NonNumeric);
  CHECK(load_error({dir / "ragged.csv"}, std::nullopt) == DataErrc::ShapeMismatch);
  CHECK(load_error({dir / "four.csv"}, std::nullopt, dir / "labels.txt", 2) == DataErrc::BadLabel);
  CHECK(load_error({dir / "missing.csv"}, std::nullopt) == DataErrc::Io);
}

TEST_CASE("non-numeric cell error names the line") {
  testing::TempDir dir("ds");
  testing::write_file(dir / "bad.csv", "1,2\n3,4\n5,oops\n");
  try {
    csv::read_matrix(dir / "bad.csv");
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }
}

TEST_CASE("labels infer the cluster count") {
  testing::TempDir dir("ds");
  testing::write_file(dir / "a.csv", "1\n2\n3\n");
  testing::write_file(dir / "l.txt", "0\n2\n1\n");
  const auto ds = load_dataset({dir / "a.csv"}, std::nullopt, dir / "l.txt");
  CHECK(ds.n_clusters() == 3);
  CHECK(*ds.labels() == Labels{0, 2, 1});
}

TEST_CASE("csv round trip is exact") {
  testing::TempDir dir("ds");
  std::mt19937_64 rng(5);
  Matrix m = oracle::random_matrix(7, 3, rng);
  m(0, 0) = 1e-300;
  m(1, 1) = -0.1;
  csv::write_matrix(dir / "m.csv", m);
  CHECK(csv::read_matrix(dir / "m.csv") == m);
}

TEST_CASE("zero rates") {
  const auto ds = testing::blob_benchmark(1);
  CHECK(apply_mask_protocol(ds, {MaskProtocol::Kind::MissingRate, 0.0, 3}).mask().complete());
  // No paired instances: every row keeps exactly one view.
  const auto single = apply_mask_protocol(ds, {MaskProtocol::Kind::PairedRate, 0.0, 3});
  for (Index i = 0; i < single.n(); ++i) CHECK(single.mask().available_in_row(i) == 1);
}

TEST_CASE("paired rate keeps exactly round(pN) rows paired") {
  BlobOptions o;
  o.n_per_cluster = 50;
  o.clusters = 2;
  const auto ds = synth_blobs(o);
  REQUIRE(ds.n() == 100);
  const auto masked = apply_mask_protocol(ds, {MaskProtocol::Kind::PairedRate, 0.5, 11});
  int paired = 0;
  int single = 0;
  for (Index i = 0; i < masked.n(); ++i) {
    const Index avail = masked.mask().available_in_row(i);
    paired += avail == 2 ? 1 : 0;
    single += avail == 1 ? 1 : 0;
  }
  CHECK(paired == 50);
  CHECK(single == 50);
}

TEST_CASE("missing rate hits the cell fraction without emptying rows") {
  BlobOptions o;
  o.n_per_cluster = 1000;
  o.clusters = 2;
  o.views = 5;
  o.dims = {2, 2, 2, 2, 2};
  const auto ds = synth_blobs(o);
  const auto masked = apply_mask_protocol(ds, {MaskProtocol::Kind::MissingRate, 0.7, 4});
  CHECK(masked.mask().missing_count() == 7000);
  for (Index i = 0; i < masked.n(); ++i) CHECK(masked.mask().available_in_row(i) >= 1);
}

TEST_CASE("mask protocol errors") {
  BlobOptions o;
  o.views = 3;
  o.dims = {2, 2, 2};
  const auto three = synth_blobs(o);
  CHECK_THROWS_AS(apply_mask_protocol(three, {MaskProtocol::Kind::PairedRate, 0.5, 0}), DataError);
  CHECK_THROWS_AS(apply_mask_protocol(three, {MaskProtocol::Kind::MissingRate, 1.0, 0}), DataError);
  // Three views can lose at most two thirds of the cells.
  CHECK_THROWS_AS(apply_mask_protocol(three, {MaskProtocol::Kind::MissingRate, 0.9, 0}), DataError);
  const auto masked = apply_mask_protocol(three, {MaskProtocol::Kind::MissingRate, 0.3, 0});
  CHECK_THROWS_AS(apply_mask_protocol(masked, {MaskProtocol::Kind::MissingRate, 0.3, 0}), DataError);
}

TEST_CASE("mask protocols are seeded and never touch features") {
  const auto ds = testing::blob_benchmark(2);
  for (auto kind : {MaskProtocol::Kind::PairedRate, MaskProtocol::Kind::MissingRate}) {
    const auto a = apply_mask_protocol(ds, {kind, 0.4, 9});
    const auto b = apply_mask_protocol(ds, {kind, 0.4, 9});
    const auto c = apply_mask_protocol(ds, {kind, 0.4, 10});
    CHECK(a.mask() == b.mask());
    CHECK_FALSE(a.mask() == c.mask());
    for (Index v = 0; v < ds.n_views(); ++v) CHECK(a.view(v) == ds.view(v));
    for (Index i = 0; i < a.n(); ++i) CHECK(a.mask().available_in_row(i) >= 1);
  }
}

TEST_CASE("blob construction") {
  const auto ds = testing::blob_benchmark(3);
  CHECK(ds.n() == 300);
  CHECK(ds.n_clusters() == 3);
  std::vector<int> counts(3, 0);
  for (int l : *ds.labels()) ++counts[static_cast<std::size_t>(l)];
  CHECK(counts == std::vector<int>{100, 100, 100});
  CHECK(ds.mask().complete());
}

TEST_CASE("zero noise blobs collapse onto their centres") {
  BlobOptions o;
  o.sigma = 0.0;
  o.seed = 8;
  const auto ds = synth_blobs(o);
  const auto& labels = *ds.labels();
  for (Index v = 0; v < ds.n_views(); ++v) {
    std::vector<std::optional<RowVector>> first(3);
    for (Index i = 0; i < ds.n(); ++i) {
      auto& f = first[static_cast<std::size_t>(labels[i])];
      const RowVector row = ds.view(v).row(static_cast<Eigen::Index>(i));
      if (!f) f = row;
      else CHECK(row == *f);
    }
  }
}

TEST_CASE("each complete blob view is perfectly separable") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto ds = testing::blob_benchmark(seed);
    for (Index v = 0; v < ds.n_views(); ++v) {
      KMeansOptions km;
      km.seed = seed;
      const auto r = kmeans(ds.view(v), 3, km);
      CHECK(metrics::acc(*ds.labels(), r.labels) == 1.0);
    }
  }
}

TEST_CASE("fill helpers only rewrite missing cells") {
  std::mt19937_64 rng(3);
  const auto ds = oracle::random_dataset(12, 3, rng, 0.4);
  const auto mean = ds.mean_filled_views();
  const auto zero = ds.zero_filled_views();
  for (Index v = 0; v < 3; ++v) {
    const RowVector m = ds.available_mean(v);
    for (Index i = 0; i < ds.n(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      if (ds.missing(i, v)) {
        CHECK(mean[v].row(r) == m);
        CHECK(zero[v].row(r).isZero());
      } else {
        CHECK(mean[v].row(r) == ds.view(v).row(r));
        CHECK(zero[v].row(r) == ds.view(v).row(r));
      }
    }
  }
}

}  // TEST_SUITE
