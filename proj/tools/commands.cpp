#include "commands.hpp"

#include <crtc/clustering.hpp>
#include <crtc/config.hpp>
#include <crtc/csv.hpp>
#include <crtc/error.hpp>
#include <crtc/projection.hpp>
#include <crtc/report.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <map>
#include <ostream>

namespace crtc::cli {
namespace fs = std::filesystem;

namespace {

std::string tag(const char* prefix, double v) { return prefix + csv::format_double(v); }

std::optional<fs::path> optional_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

std::vector<fs::path> to_paths(const std::vector<std::string>& items) { return {items.begin(), items.end()}; }

// --- synth ------------------------------------------------------------------

struct SynthArgs {
  BlobOptions blobs;
  std::string out = "blobs";
  std::string protocol = "auto";
  std::optional<double> p;
};

void add_synth(CLI::App& app, SynthArgs& a) {
  app.add_option("--out", a.out, "output directory")->capture_default_str();
  app.add_option("--seed", a.blobs.seed, "random seed")->capture_default_str();
  app.add_option("--n-per-cluster,--n_per_cluster", a.blobs.n_per_cluster, "instances per cluster")
      ->capture_default_str();
  app.add_option("--clusters", a.blobs.clusters, "number of clusters")->capture_default_str();
  app.add_option("--views", a.blobs.views, "number of views")->capture_default_str();
  app.add_option("--dims", a.blobs.dims, "feature width per view (one value is reused for every view)")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--sigma", a.blobs.sigma, "noise standard deviation")->capture_default_str();
  app.add_option("--protocol", a.protocol, "mask protocol when --p is given: auto|paired|missing")
      ->capture_default_str();
  app.add_option("--p", a.p, "masking rate; writes mask.csv");
}

int run_synth(SynthArgs a, std::ostream& out) {
  if (a.blobs.dims.size() == 1 && a.blobs.views > 1) a.blobs.dims.assign(a.blobs.views, a.blobs.dims.front());
  MultiViewDataset ds = synth_blobs(a.blobs);
  fs::create_directories(a.out);
  const fs::path dir(a.out);
  for (Index v = 0; v < ds.n_views(); ++v) csv::write_matrix(dir / ("view" + std::to_string(v) + ".csv"), ds.view(v));
  csv::write_labels(dir / "labels.txt", *ds.labels());
  if (a.p) {
    CliConfig c;
    c.set("protocol", a.protocol);
    c.train.seed = a.blobs.seed;
    ds = apply_mask_protocol(ds, c.mask_protocol(*a.p, ds.n_views()));
    csv::write_matrix(dir / "mask.csv", ds.mask().to_matrix());
  }
  out << "wrote " << ds.n() << " instances x " << ds.n_views() << " views to " << dir.string() << "\n";
  return kOk;
}

// --- mask -------------------------------------------------------------------

struct MaskArgs {
  std::vector<std::string> views;
  std::string protocol = "auto";
  double p = 0.5;
  std::uint64_t seed = 0;
  std::string out = "mask.csv";
};

void add_mask(CLI::App& app, MaskArgs& a) {
  app.add_option("--views", a.views, "view CSV paths")->required()->delimiter(',');
  app.add_option("--protocol", a.protocol, "auto|paired|missing; auto = paired for two views")
      ->capture_default_str();
  app.add_option("--p", a.p, "paired-view rate or missing-cell rate")->capture_default_str();
  app.add_option("--seed", a.seed, "random seed")->capture_default_str();
  app.add_option("--out", a.out, "mask CSV to write")->capture_default_str();
}

int run_mask(const MaskArgs& a, std::ostream& out) {
  const MultiViewDataset ds = load_dataset(to_paths(a.views), std::nullopt, std::nullopt, 1);
  CliConfig c;
  c.set("protocol", a.protocol);
  c.train.seed = a.seed;
  const MultiViewDataset masked = apply_mask_protocol(ds, c.mask_protocol(a.p, ds.n_views()));
  const fs::path path(a.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  csv::write_matrix(path, masked.mask().to_matrix());
  out << "wrote mask with " << masked.mask().missing_count() << " missing cells to " << path.string() << "\n";
  return kOk;
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::map<std::string, std::vector<std::string>> flags;
  bool no_wall_time = false;
};

void add_train(CLI::App& app, TrainArgs& a) {
  app.add_option("--config", a.config, "key = value configuration file; flags override it");
  app.add_flag("--no-wall-time", a.no_wall_time, "omit wall time from report.txt");
  for (const auto& key : CliConfig::keys()) {
    std::string names = std::string("--") + key.name;
    std::string dashed = key.name;
    std::replace(dashed.begin(), dashed.end(), '_', '-');
    if (dashed != key.name) names += ",--" + dashed;
    auto* opt = app.add_option(names, a.flags[key.name], key.help);
    const std::string name = key.name;
    if (name == "views" || name == "p" || name == "k" || name == "hidden") {
      opt->delimiter(',');
    } else {
      opt->expected(1)->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    }
  }
}

int run_train(const TrainArgs& a, std::ostream& out) {
  CliConfig c;
  if (!a.config.empty()) c.load_file(a.config);
  for (const auto& [key, values] : a.flags) {
    if (values.empty()) continue;
    std::string joined;
    for (const auto& v : values) joined += (joined.empty() ? "" : ",") + v;
    c.set(key, joined);
  }
  if (c.views.empty()) throw ConfigError("no views given (set 'views' or pass --views)");

  const MultiViewDataset base =
      load_dataset(to_paths(c.views), optional_path(c.mask), optional_path(c.labels), c.clusters);
  const Variant variant = variant_from_string(c.variant);

  std::vector<std::optional<double>> rates(c.p.begin(), c.p.end());
  if (rates.empty()) rates.push_back(std::nullopt);
  std::vector<std::optional<Index>> ks(c.k.begin(), c.k.end());
  if (ks.empty()) ks.push_back(std::nullopt);

  ReportFormat format;
  format.wall_time = !a.no_wall_time;
  for (const auto& rate : rates) {
    for (const auto& k : ks) {
      const TrainConfig config = c.train_config(rate, k, base.n_views());
      const MultiViewDataset ds = config.mask ? apply_mask_protocol(base, *config.mask) : base;
      RunReport report = run_ablation(ds, config, variant);
      auto inputs = c.describe_inputs();
      report.config.insert(report.config.begin(), inputs.begin(), inputs.end());

      fs::path dir(c.out);
      std::string sub;
      if (rates.size() > 1) sub = tag("p", *rate);
      if (ks.size() > 1) sub += (sub.empty() ? "" : "_") + std::string("k") + std::to_string(*k);
      if (!sub.empty()) dir /= sub;
      write_run_outputs(dir, report, format);

      out << dir.string() << ": " << to_string(variant) << " stop=" << to_string(report.stop_reason);
      if (report.scores)
        out << " acc=" << csv::format_double(report.scores->acc) << " nmi=" << csv::format_double(report.scores->nmi)
            << " ari=" << csv::format_double(report.scores->ari);
      out << "\n";
    }
  }
  return kOk;
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string labels;
  std::string assignments;
};

void add_eval(CLI::App& app, EvalArgs& a) {
  app.add_option("--labels", a.labels, "ground-truth labels")->required();
  app.add_option("--assignments,--pred", a.assignments, "predicted assignments")->required();
}

int run_eval(const EvalArgs& a, std::ostream& out) {
  const auto s = metrics::evaluate(csv::read_labels(a.labels), csv::read_labels(a.assignments));
  out << "acc = " << csv::format_double(s.acc) << "\nnmi = " << csv::format_double(s.nmi)
      << "\nari = " << csv::format_double(s.ari) << "\n";
  return kOk;
}

// --- project ----------------------------------------------------------------

struct ProjectArgs {
  std::string run;
  std::string input;
  std::string assignments;
  std::string labels;
  std::string out;
};

void add_project(CLI::App& app, ProjectArgs& a) {
  app.add_option("--run", a.run, "training output directory (reads fused.csv and assignments.txt)");
  app.add_option("--input", a.input, "embedding CSV, overrides --run");
  app.add_option("--assignments", a.assignments, "assignments file, overrides --run");
  app.add_option("--labels", a.labels, "ground-truth labels to append as a column");
  app.add_option("--out", a.out, "output CSV (default: <run>/projection.csv)");
}

int run_project(ProjectArgs a, std::ostream& out) {
  if (a.input.empty()) {
    if (a.run.empty()) throw ConfigError("project needs --run or --input");
    a.input = (fs::path(a.run) / "fused.csv").string();
  }
  if (a.assignments.empty() && !a.run.empty()) a.assignments = (fs::path(a.run) / "assignments.txt").string();
  if (a.out.empty()) a.out = a.run.empty() ? "projection.csv" : (fs::path(a.run) / "projection.csv").string();
  if (!fs::exists(a.input)) throw DataError(DataErrc::Io, "missing embedding export " + a.input);

  const Matrix x = csv::read_matrix(a.input);
  const Projection proj = pca2(x);
  const auto n = static_cast<std::size_t>(x.rows());
  Labels assigned;
  Labels truth;
  if (!a.assignments.empty()) assigned = csv::read_labels(a.assignments);
  if (!a.labels.empty()) truth = csv::read_labels(a.labels);
  if ((!assigned.empty() && assigned.size() != n) || (!truth.empty() && truth.size() != n))
    throw DataError(DataErrc::RowCountMismatch, "label file length differs from the embedding row count");

  Matrix table(x.rows(), 2 + (assigned.empty() ? 0 : 1) + (truth.empty() ? 0 : 1));
  table.leftCols(2) = proj.coords;
  Eigen::Index col = 2;
  for (const Labels* labels : {&assigned, &truth}) {
    if (labels->empty()) continue;
    for (std::size_t i = 0; i < n; ++i) table(static_cast<Eigen::Index>(i), col) = (*labels)[i];
    ++col;
  }
  csv::write_matrix(a.out, table);
  out << "wrote " << n << " projected rows to " << a.out << "\n";
  return kOk;
}

}  // namespace

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Incomplete multi-view clustering with relation transfer completion"};
  app.name("crtc");
  app.require_subcommand(1);

  SynthArgs synth;
  MaskArgs mask;
  TrainArgs train;
  EvalArgs eval;
  ProjectArgs project;
  auto* synth_cmd = app.add_subcommand("synth", "write a labelled Gaussian-blob multi-view dataset");
  auto* mask_cmd = app.add_subcommand("mask", "write a missing-view mask for complete views");
  auto* train_cmd = app.add_subcommand("train", "train a model or ablation variant and write its report");
  auto* eval_cmd = app.add_subcommand("eval", "score assignments against labels (ACC, NMI, ARI)");
  auto* project_cmd = app.add_subcommand("project", "PCA projection of an embedding export to 2-D CSV");
  add_synth(*synth_cmd, synth);
  add_mask(*mask_cmd, mask);
  add_train(*train_cmd, train);
  add_eval(*eval_cmd, eval);
  add_project(*project_cmd, project);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(synth, out);
    if (mask_cmd->parsed()) return run_mask(mask, out);
    if (train_cmd->parsed()) return run_train(train, out);
    if (eval_cmd->parsed()) return run_eval(eval, out);
    if (project_cmd->parsed()) return run_project(project, out);
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumericError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kUsage;
}

}  // namespace crtc::cli
