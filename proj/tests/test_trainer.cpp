#include "helpers.hpp"
#include "oracles.hpp"

#include <crtc/error.hpp>
#include <crtc/report.hpp>
#include <crtc/trainer.hpp>

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace crtc;

namespace {

// Small enough to train in well under a second.
TrainConfig quick_config(std::uint64_t seed = 1) {
  TrainConfig c;
  c.hidden = {32};
  c.epochs_cr = 30;
  c.epochs_mr = 40;
  c.max_iter = 20;
  c.kmeans_restarts = 3;
  c.lr_pretrain = 1e-2;
  c.seed = seed;
  return c;
}

MultiViewDataset small_blobs(std::uint64_t seed, double paired = 0.5) {
  BlobOptions o;
  o.n_per_cluster = 20;
  o.dims = {8, 6};
  o.seed = seed;
  return apply_mask_protocol(synth_blobs(o), {MaskProtocol::Kind::PairedRate, paired, seed});
}

std::vector<std::string> without_refresh(const std::vector<std::string>& phases) {
  std::vector<std::string> out;
  for (const auto& p : phases)
    if (p.rfind("refresh@", 0) != 0) out.push_back(p);
  return out;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("phases run in order") {
  const auto ds = small_blobs(1);
  const auto r = run_crtc(ds, quick_config());
  const std::vector<std::string> expected{"build_transfer_graph", "pretrain_completion", "materialize",
                                          "pretrain_fusion",      "kmeans_init",         "target_distribution",
                                          "joint_loop",           std::string("stop:") + to_string(r.stop_reason)};
  CHECK(without_refresh(r.phases) == expected);
  CHECK(r.phases.at(7) == "refresh@0");
  CHECK(r.traces.at("L_cr").size() == 30);
  CHECK(r.traces.at("L_mr").size() == 40);
  CHECK(r.traces.at("L_mc").size() == static_cast<std::size_t>(r.iterations));
  CHECK(r.traces.at("L_cc").size() == static_cast<std::size_t>(r.iterations));
  CHECK(r.assignments.size() == ds.n());
  CHECK(r.fused.rows() == static_cast<Eigen::Index>(ds.n()));
}

TEST_CASE("delta of one stops at the first check after an interval") {
  auto c = quick_config();
  c.delta = 1.0;
  c.update_interval = 3;
  const auto r = run_crtc(small_blobs(2), c);
  CHECK(r.stop_reason == StopReason::DeltaConverged);
  CHECK(r.iterations == 3);
  CHECK(r.phases.back() == "stop:delta_converged");
}

TEST_CASE("max_iter stop") {
  auto c = quick_config();
  c.max_iter = 4;
  c.update_interval = 5;
  const auto r = run_crtc(small_blobs(3), c);
  CHECK(r.stop_reason == StopReason::MaxIter);
  CHECK(r.iterations == 4);
  CHECK(r.traces.at("L_mc").size() == 4);
}

TEST_CASE("fixed seed gives identical reports") {
  const auto ds = small_blobs(4);
  ReportFormat f;
  f.wall_time = false;
  const auto a = run_crtc(ds, quick_config(9));
  const auto b = run_crtc(ds, quick_config(9));
  CHECK(format_report(a, f) == format_report(b, f));
  CHECK(a.fused == b.fused);
  const auto c = run_crtc(ds, quick_config(10));
  CHECK(format_report(a, f) != format_report(c, f));
}

TEST_CASE("labels are only used for scoring") {
  const auto labelled = small_blobs(5);
  const MultiViewDataset bare(labelled.views(), labelled.mask(), labelled.n_clusters());
  const auto a = run_crtc(labelled, quick_config());
  const auto b = run_crtc(bare, quick_config());
  CHECK(a.assignments == b.assignments);
  CHECK(a.scores.has_value());
  CHECK_FALSE(b.scores.has_value());
  CHECK(format_report(b).find("acc =") == std::string::npos);
}

TEST_CASE("every joint epoch keeps distributions normalised") {
  const auto ds = small_blobs(6);
  auto c = quick_config();
  c.delta = 1e-9;
  c.max_iter = 12;
  int epochs = 0;
  const auto r = run_crtc(ds, c, [&](const EpochSnapshot& s) {
    ++epochs;
    for (Eigen::Index i = 0; i < s.q.rows(); ++i) {
      CHECK(std::abs(s.q.row(i).sum() - 1.0) <= 1e-9);
      CHECK(std::abs(s.p.row(i).sum() - 1.0) <= 1e-9);
      CHECK(std::abs(s.alpha.row(i).sum() - 1.0) <= 1e-12);
    }
    CHECK(s.l_mc >= 0.0);
    CHECK(s.l_cc >= 0.0);
  });
  CHECK(epochs == r.iterations);
}

TEST_CASE("unweighted fusion uses exactly 1/V") {
  const auto r = run_ablation(small_blobs(7), quick_config(), Variant::CRTC_waf);
  CHECK(r.alpha == Matrix::Constant(r.alpha.rows(), 2, 0.5));
}

TEST_CASE("variant contracts") {
  const auto ds = small_blobs(8);
  const auto c = quick_config();
  SUBCASE("bsv reports per-view accuracy") {
    const auto r = run_ablation(ds, c, Variant::BSV);
    const auto has = [&](const std::string& key) {
      return std::any_of(r.extras.begin(), r.extras.end(), [&](const auto& e) { return e.first == key; });
    };
    CHECK(has("acc_view0"));
    CHECK(has("acc_view1"));
    CHECK(has("best_view"));
    double best = 0.0;
    for (const auto& [k, v] : r.extras)
      if (k.rfind("acc_view", 0) == 0) best = std::max(best, v);
    CHECK(r.scores->acc == best);
  }
  SUBCASE("without the joint loop") {
    const auto r = run_ablation(ds, c, Variant::CRTC_wjd);
    CHECK(r.stop_reason == StopReason::NotApplicable);
    CHECK(r.iterations == 0);
    CHECK(std::find(r.phases.begin(), r.phases.end(), "joint_loop") == r.phases.end());
  }
  SUBCASE("mean imputation skips completion") {
    const auto r = run_ablation(ds, c, Variant::AveMFC);
    CHECK(r.phases.front() == "mean_fill");
    CHECK(r.traces.count("L_cr") == 0);
    CHECK(r.recovered_views == ds.mean_filled_views());
  }
  SUBCASE("concat fills with zeros") {
    const auto r = run_ablation(ds, c, Variant::Concat);
    CHECK(r.recovered_views == ds.zero_filled_views());
  }
  SUBCASE("recovered baselines share the completion stage") {
    const auto a = run_ablation(ds, c, Variant::RecConcat);
    const auto b = run_ablation(ds, c, Variant::RecBSV);
    CHECK(a.recovered_views == b.recovered_views);
    CHECK(a.recovered_views != ds.zero_filled_views());
  }
  SUBCASE("full equals run_crtc") {
    ReportFormat f;
    f.wall_time = false;
    CHECK(format_report(run_ablation(ds, c, Variant::Full), f) == format_report(run_crtc(ds, c), f));
  }
}

TEST_CASE("variant names") {
  for (Variant v : all_variants()) CHECK(variant_from_string(to_string(v)) == v);
  CHECK(variant_from_string("CRTC-waf") == Variant::CRTC_waf);
  CHECK(variant_from_string("RecConcat") == Variant::RecConcat);
  CHECK_THROWS_AS(variant_from_string("nope"), ConfigError);
}

TEST_CASE("pure clustering loss in the joint phase") {
  auto c = quick_config();
  c.joint_reconstruction = false;
  const auto r = run_crtc(small_blobs(9), c);
  for (double v : r.traces.at("L_mr_joint")) CHECK(v == 0.0);
  const auto echo = describe(c);
  CHECK(std::find(echo.begin(), echo.end(), std::pair<std::string, std::string>{"lambda", "inf"}) != echo.end());
}

TEST_CASE("config validation") {
  const auto ds = small_blobs(10);
  auto bad = [&](auto mutate) {
    auto c = quick_config();
    mutate(c);
    CHECK_THROWS_AS(run_crtc(ds, c), ConfigError);
  };
  bad([](TrainConfig& c) { c.epochs_cr = 0; });
  bad([](TrainConfig& c) { c.max_iter = 0; });
  bad([](TrainConfig& c) { c.update_interval = 0; });
  bad([](TrainConfig& c) { c.delta = 0.0; });
  bad([](TrainConfig& c) { c.lambda = -1.0; });
  const MultiViewDataset one_cluster(ds.views(), ds.mask(), 1);
  CHECK_THROWS_AS(run_crtc(one_cluster, quick_config()), ConfigError);
  CHECK(TrainConfig{}.effective_k(2) == 10);
  CHECK(TrainConfig{}.effective_k(3) == 5);
}

TEST_CASE("numeric failures name the phase") {
  auto ds = small_blobs(11);
  std::vector<Matrix> huge = ds.views();
  for (auto& m : huge) m *= 1e160;
  const auto blown = ds.with_views(huge);
  try {
    run_crtc(blown, quick_config());
    FAIL("expected a numeric error");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("pretrain_completion") != std::string::npos);
  }
}

TEST_CASE("recovery error") {
  const auto truth = testing::blob_benchmark(3);
  const auto masked = apply_mask_protocol(truth, {MaskProtocol::Kind::PairedRate, 0.5, 3});
  const auto e = recovery_error(masked, truth.views(), truth.views());
  CHECK(e.model == 0.0);
  CHECK(e.cells == 150);
  CHECK(e.mean_imputation > 0.0);
  const auto filled = recovery_error(masked, masked.mean_filled_views(), truth.views());
  CHECK(filled.model == doctest::Approx(filled.mean_imputation).epsilon(1e-12));
}

}  // TEST_SUITE
