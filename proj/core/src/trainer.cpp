#include <crtc/trainer.hpp>

#include <crtc/clustering.hpp>
#include <crtc/csv.hpp>
#include <crtc/error.hpp>
#include <crtc/knn_transfer.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace crtc {

using diff::Tape;
using diff::Var;

void TrainConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw ConfigError(std::string(name) + " must be at least 1");
  };
  positive(epochs_cr, "epochs_cr");
  positive(epochs_mr, "epochs_mr");
  positive(max_iter, "max_iter");
  positive(update_interval, "update_interval");
  positive(kmeans_restarts, "kmeans_restarts");
  if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("delta must lie in (0, 1]");
  if (!(lambda >= 0.0) || std::isnan(lambda)) throw ConfigError("lambda must be non-negative");
  if (!(lr_pretrain >= 0.0) || !(lr_joint >= 0.0)) throw ConfigError("learning rates must be non-negative");
  for (Index h : hidden)
    if (h == 0) throw ConfigError("hidden layer widths must be positive");
}

namespace {

struct VariantName {
  Variant variant;
  const char* name;
};

constexpr VariantName kVariantNames[] = {
    {Variant::BSV, "bsv"},           {Variant::Concat, "concat"},     {Variant::RecBSV, "recbsv"},
    {Variant::RecConcat, "recconcat"}, {Variant::AveMFC, "avemfc"},   {Variant::CRTC_wjd, "crtc_wjd"},
    {Variant::CRTC_waf, "crtc_waf"}, {Variant::Full, "full"},
};

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finaliser over (seed, stream).
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<Index> view_dims(const MultiViewDataset& ds) {
  std::vector<Index> dims;
  for (Index v = 0; v < ds.n_views(); ++v) dims.push_back(ds.dim(v));
  return dims;
}

Matrix hconcat(const std::vector<Matrix>& views) {
  Eigen::Index cols = 0;
  for (const auto& m : views) cols += m.cols();
  Matrix out(views.front().rows(), cols);
  Eigen::Index at = 0;
  for (const auto& m : views) {
    out.middleCols(at, m.cols()) = m;
    at += m.cols();
  }
  return out;
}

std::vector<Var> constants(Tape& tape, const std::vector<Matrix>& views) {
  std::vector<Var> out;
  for (const auto& m : views) out.push_back(tape.constant(m));
  return out;
}

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void check_inputs(const MultiViewDataset& ds, const TrainConfig& config) {
  config.validate();
  if (ds.n_clusters() < 2) throw ConfigError("training needs at least 2 clusters");
  if (static_cast<Index>(ds.n_clusters()) > ds.n())
    throw ConfigError("more clusters than instances");
}

void finish(RunReport& report, const MultiViewDataset& ds, const Clock& clock) {
  if (ds.labels()) report.scores = metrics::evaluate(*ds.labels(), report.assignments);
  report.wall_time_s = clock.seconds();
}

template <typename F>
auto with_phase(const char* phase, F&& f) {
  try {
    return f();
  } catch (const NumericError& e) {
    throw NumericError(std::string(phase) + ": " + e.what());
  }
}

RunReport run_kmeans_baseline(const MultiViewDataset& ds, const TrainConfig& config, Variant variant) {
  check_inputs(ds, config);
  Clock clock;
  RunReport report;
  report.variant = variant;
  report.config = describe(config);
  const bool recovered = variant == Variant::RecBSV || variant == Variant::RecConcat;
  const bool single_view = variant == Variant::BSV || variant == Variant::RecBSV;

  std::vector<Matrix> views;
  if (recovered) {
    report.phases.push_back("build_transfer_graph");
    const TransferGraph graph = build_transfer_graph(ds, config.effective_k(ds.n_views()));
    CompletionNet net = CompletionNet::create(view_dims(ds), config.activation, derive_seed(config.seed, 1));
    report.phases.push_back("pretrain_completion");
    if (!graph.empty()) {
      report.traces["L_cr"] = with_phase("pretrain_completion", [&] {
        return pretrain_completion(net, ds, graph, config.epochs_cr, {config.lr_pretrain});
      });
    }
    report.phases.push_back("materialize");
    views = materialize(net, ds, graph).views;
  } else if (single_view) {
    report.phases.push_back("mean_fill");
    views = ds.mean_filled_views();
  } else {
    report.phases.push_back("zero_fill");
    views = ds.zero_filled_views();
  }

  KMeansOptions km;
  km.restarts = config.kmeans_restarts;
  report.phases.push_back("kmeans");
  if (single_view) {
    double best_acc = -1.0;
    Index best_view = 0;
    for (Index v = 0; v < views.size(); ++v) {
      km.seed = derive_seed(config.seed, 10 + v);
      const KMeansResult result = kmeans(views[v], ds.n_clusters(), km);
      // Without labels the view with the most available instances is used.
      double score = static_cast<double>(ds.available_in(v).size());
      if (ds.labels()) {
        score = metrics::acc(*ds.labels(), result.labels);
        report.extras.emplace_back("acc_view" + std::to_string(v), score);
      }
      if (score > best_acc) {
        best_acc = score;
        best_view = v;
        report.assignments = result.labels;
      }
    }
    report.extras.emplace_back("best_view", static_cast<double>(best_view));
  } else {
    km.seed = derive_seed(config.seed, 10);
    report.assignments = kmeans(hconcat(views), ds.n_clusters(), km).labels;
  }
  report.recovered_views = std::move(views);
  finish(report, ds, clock);
  return report;
}

RunReport run_pipeline(const MultiViewDataset& ds, const TrainConfig& config, Variant variant,
                       const EpochObserver& observer) {
  check_inputs(ds, config);
  Clock clock;
  RunReport report;
  report.variant = variant;
  report.config = describe(config);

  const bool use_completion = variant != Variant::AveMFC;
  const bool attention = variant != Variant::CRTC_waf;
  const bool joint = variant != Variant::CRTC_wjd;
  const diff::AdamOptions pretrain_adam{config.lr_pretrain};
  const diff::AdamOptions joint_adam{config.lr_joint};
  const auto dims = view_dims(ds);

  std::optional<TransferGraph> graph;
  std::optional<CompletionNet> completion;
  std::vector<Matrix> views;
  if (use_completion) {
    report.phases.push_back("build_transfer_graph");
    graph = build_transfer_graph(ds, config.effective_k(ds.n_views()));
    Index fallbacks = 0;
    for (const auto& [key, entry] : graph->entries()) fallbacks += entry.fallback ? 1 : 0;
    report.extras.emplace_back("transfer_entries", static_cast<double>(graph->size()));
    report.extras.emplace_back("transfer_fallbacks", static_cast<double>(fallbacks));

    completion = CompletionNet::create(dims, config.activation, derive_seed(config.seed, 1));
    report.phases.push_back("pretrain_completion");
    if (!graph->empty()) {
      report.traces["L_cr"] = with_phase("pretrain_completion", [&] {
        return pretrain_completion(*completion, ds, *graph, config.epochs_cr, pretrain_adam);
      });
    }
    report.phases.push_back("materialize");
    views = materialize(*completion, ds, *graph).views;
  } else {
    report.phases.push_back("mean_fill");
    views = ds.mean_filled_views();
  }

  FusionOptions fusion_options;
  fusion_options.hidden = config.hidden;
  fusion_options.embed_dim = config.embed_dim != 0 ? config.embed_dim : default_embed_dim(ds.n_clusters());
  fusion_options.attention = attention;
  FusionNet fusion = FusionNet::create(dims, fusion_options, derive_seed(config.seed, 2));
  report.phases.push_back("pretrain_fusion");
  report.traces["L_mr"] = with_phase("pretrain_fusion", [&] {
    return pretrain_fusion(fusion, views, config.epochs_mr, pretrain_adam);
  });

  CommonRepresentation rep = fuse(fusion, views);
  report.phases.push_back("kmeans_init");
  KMeansOptions km;
  km.restarts = config.kmeans_restarts;
  km.seed = derive_seed(config.seed, 3);
  diff::ParamStore cluster;
  cluster.add("cluster.mu", kmeans(rep.fused, ds.n_clusters(), km).centers);

  report.phases.push_back("target_distribution");
  Matrix q = soft_assign(rep.fused, cluster.value("cluster.mu"));
  Matrix p = target_distribution(q);
  Labels r = hard_assign(q);

  if (joint) {
    report.phases.push_back("joint_loop");
    const auto pairs = graph ? relation_pairs(*graph) : std::vector<std::pair<Index, Index>>{};
    auto& trace_mc = report.traces["L_mc"];
    auto& trace_cc = report.traces["L_cc"];
    auto& trace_mr = report.traces["L_mr_joint"];
    report.stop_reason = StopReason::MaxIter;
    int iter = 0;
    for (; iter < config.max_iter; ++iter) {
      if (iter % config.update_interval == 0) {
        if (use_completion) views = materialize(*completion, ds, *graph).views;
        rep = fuse(fusion, views);
        q = soft_assign(rep.fused, cluster.value("cluster.mu"));
        p = target_distribution(q);
        const Labels previous = std::move(r);
        r = hard_assign(q);
        report.phases.push_back("refresh@" + std::to_string(iter));
        if (iter > 0 && label_change_fraction(previous, r) <= config.delta) {
          report.stop_reason = StopReason::DeltaConverged;
          break;
        }
      }

      double l_cc = 0.0;
      if (!pairs.empty()) {
        with_phase("joint completion update", [&] {
          Tape tape;
          const auto cviews = completed_views(tape, *completion, ds, *graph, true);
          const auto fwd = fusion_forward(tape, fusion, cviews, false);
          Var qv = soft_assign(fwd.fused, tape.constant(cluster.value("cluster.mu")));
          Var loss = diff::pair_kl(qv, pairs);
          l_cc = loss.scalar();
          tape.backward(loss);
          diff::adam_step(completion->params, tape.gradients(completion->params), joint_adam);
          return 0;
        });
      }

      with_phase("joint fusion update", [&] {
        Tape tape;
        const auto vars = constants(tape, views);
        const auto fwd = fusion_forward(tape, fusion, vars, true);
        Var qv = soft_assign(fwd.fused, tape.param(cluster, "cluster.mu"));
        Var lmc = loss_mc(p, qv);
        Var total = lmc;
        double l_mr = 0.0;
        if (config.joint_reconstruction) {
          Var lmr = loss_mr(tape, fusion, vars, fwd.fused, true);
          l_mr = lmr.scalar();
          total = diff::add(lmr, diff::scale(lmc, config.lambda));
        }
        trace_mc.push_back(lmc.scalar());
        trace_cc.push_back(l_cc);
        trace_mr.push_back(l_mr);
        if (observer) observer(EpochSnapshot{iter, qv.value(), p, fwd.alpha.value(), lmc.scalar(), l_cc, l_mr});
        tape.backward(total);
        diff::adam_step(fusion.params, tape.gradients(fusion.params), joint_adam);
        diff::adam_step(cluster, tape.gradients(cluster), joint_adam);
        return 0;
      });
    }
    report.iterations = iter;
    if (report.stop_reason == StopReason::MaxIter) {
      if (use_completion) views = materialize(*completion, ds, *graph).views;
      rep = fuse(fusion, views);
      q = soft_assign(rep.fused, cluster.value("cluster.mu"));
      r = hard_assign(q);
    }
    report.phases.push_back(std::string("stop:") + to_string(report.stop_reason));
  }

  report.assignments = std::move(r);
  report.fused = std::move(rep.fused);
  report.alpha = std::move(rep.alpha);
  report.q = std::move(q);
  report.recovered_views = std::move(views);
  finish(report, ds, clock);
  return report;
}

}  // namespace

const char* to_string(Variant v) {
  for (const auto& vn : kVariantNames)
    if (vn.variant == v) return vn.name;
  return "full";
}

Variant variant_from_string(const std::string& s) {
  std::string lower;
  for (char c : s) lower += c == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (const auto& vn : kVariantNames)
    if (lower == vn.name) return vn.variant;
  throw ConfigError("unknown variant '" + s + "'");
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> variants{Variant::BSV,    Variant::Concat,   Variant::RecBSV,   Variant::RecConcat,
                                             Variant::AveMFC, Variant::CRTC_wjd, Variant::CRTC_waf, Variant::Full};
  return variants;
}

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::DeltaConverged: return "delta_converged";
    case StopReason::MaxIter: return "max_iter";
    case StopReason::NotApplicable: return "not_applicable";
  }
  return "not_applicable";
}

std::vector<std::pair<std::string, std::string>> describe(const TrainConfig& c) {
  auto num = [](double v) {
    if (std::isinf(v)) return std::string("inf");
    return csv::format_double(v);
  };
  std::string hidden;
  for (Index h : c.hidden) hidden += (hidden.empty() ? "" : ",") + std::to_string(h);
  std::string protocol = "none";
  std::string p = "0";
  if (c.mask) {
    protocol = c.mask->kind == MaskProtocol::Kind::PairedRate ? "paired" : "missing";
    p = num(c.mask->p);
  }
  return {
      {"k", std::to_string(c.k)},
      {"embed_dim", std::to_string(c.embed_dim)},
      {"hidden", hidden},
      {"activation", diff::to_string(c.activation)},
      {"lr_pretrain", num(c.lr_pretrain)},
      {"lr_joint", num(c.lr_joint)},
      {"epochs_cr", std::to_string(c.epochs_cr)},
      {"epochs_mr", std::to_string(c.epochs_mr)},
      {"max_iter", std::to_string(c.max_iter)},
      {"update_interval", std::to_string(c.update_interval)},
      {"delta", num(c.delta)},
      {"lambda", c.joint_reconstruction ? num(c.lambda) : std::string("inf")},
      {"kmeans_restarts", std::to_string(c.kmeans_restarts)},
      {"seed", std::to_string(c.seed)},
      {"protocol", protocol},
      {"p", p},
  };
}

RunReport run_crtc(const MultiViewDataset& dataset, const TrainConfig& config, const EpochObserver& observer) {
  return run_pipeline(dataset, config, Variant::Full, observer);
}

RunReport run_ablation(const MultiViewDataset& dataset, const TrainConfig& config, Variant variant,
                       const EpochObserver& observer) {
  switch (variant) {
    case Variant::BSV:
    case Variant::Concat:
    case Variant::RecBSV:
    case Variant::RecConcat:
      return run_kmeans_baseline(dataset, config, variant);
    case Variant::AveMFC:
    case Variant::CRTC_wjd:
    case Variant::CRTC_waf:
    case Variant::Full:
      return run_pipeline(dataset, config, variant, observer);
  }
  throw ConfigError("unknown variant");
}

RecoveryError recovery_error(const MultiViewDataset& masked, const std::vector<Matrix>& recovered,
                             const std::vector<Matrix>& truth) {
  if (recovered.size() != masked.n_views() || truth.size() != masked.n_views())
    throw DataError(DataErrc::ShapeMismatch, "recovery_error: view count mismatch");
  RecoveryError out;
  for (Index v = 0; v < masked.n_views(); ++v) {
    const RowVector mean = masked.available_mean(v);
    const double dim = static_cast<double>(masked.dim(v));
    for (Index i = 0; i < masked.n(); ++i) {
      if (!masked.missing(i, v)) continue;
      const auto row = static_cast<Eigen::Index>(i);
      out.model += (recovered[v].row(row) - truth[v].row(row)).squaredNorm() / dim;
      out.mean_imputation += (mean - truth[v].row(row)).squaredNorm() / dim;
      ++out.cells;
    }
  }
  if (out.cells > 0) {
    out.model /= static_cast<double>(out.cells);
    out.mean_imputation /= static_cast<double>(out.cells);
  }
  return out;
}

}  // namespace crtc
