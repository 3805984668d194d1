#pragma once

#include <crtc/completion.hpp>
#include <crtc/dataset.hpp>
#include <crtc/diff.hpp>
#include <crtc/fusion.hpp>
#include <crtc/metrics.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace crtc {

struct TrainConfig {
  Index k = 0;          // KNN size; 0 picks 10 for two views and 5 otherwise
  Index embed_dim = 0;  // 0 picks default_embed_dim(C)
  std::vector<Index> hidden{500};
  double lr_pretrain = 1e-3;
  double lr_joint = 1e-3;
  int epochs_cr = 300;
  int epochs_mr = 500;
  int max_iter = 200;
  int update_interval = 5;  // T: epochs between target refreshes
  double delta = 0.001;     // stop once this fraction of assignments or fewer change
  double lambda = 0.1;      // weight of L_mc next to L_mr in the joint fusion update
  bool joint_reconstruction = true;  // false drops L_mr from the joint update
  std::uint64_t seed = 0;
  diff::Activation activation = diff::Activation::Identity;
  int kmeans_restarts = 20;
  // Echoed only; masking happens before training (see apply_mask_protocol).
  std::optional<MaskProtocol> mask;

  void validate() const;  // throws ConfigError
  Index effective_k(Index n_views) const { return k != 0 ? k : (n_views == 2 ? 10 : 5); }
};

enum class Variant { BSV, Concat, RecBSV, RecConcat, AveMFC, CRTC_wjd, CRTC_waf, Full };

const char* to_string(Variant v);
Variant variant_from_string(const std::string& s);  // case-insensitive; throws ConfigError
const std::vector<Variant>& all_variants();

enum class StopReason { DeltaConverged, MaxIter, NotApplicable };
const char* to_string(StopReason r);

struct RunReport {
  std::vector<std::pair<std::string, std::string>> config;  // echo, in key order
  Variant variant = Variant::Full;
  std::map<std::string, std::vector<double>> traces;         // L_cr, L_mr, L_mc, L_cc
  Labels assignments;
  std::optional<metrics::Scores> scores;                     // only with labels
  std::vector<std::pair<std::string, double>> extras;        // variant-specific numbers
  std::vector<std::string> phases;                           // ordered phase log
  StopReason stop_reason = StopReason::NotApplicable;
  int iterations = 0;
  double wall_time_s = 0.0;
  Matrix fused;  // common representation (empty for k-means-only variants)
  Matrix alpha;
  Matrix q;
  std::vector<Matrix> recovered_views;  // data the clustering saw (filled or recovered)
};

// Per-epoch state of the joint loop, taken before the epoch's updates.
struct EpochSnapshot {
  int iter = 0;
  const Matrix& q;
  const Matrix& p;
  const Matrix& alpha;
  double l_mc = 0.0;
  double l_cc = 0.0;
  double l_mr = 0.0;
};
using EpochObserver = std::function<void(const EpochSnapshot&)>;

// Key-value echo of a config (the keys the CLI understands).
std::vector<std::pair<std::string, std::string>> describe(const TrainConfig& config);

// Full pipeline: transfer graph, completion pretraining, recovery, fusion
// pretraining, k-means centres, then the alternating self-training loop.
RunReport run_crtc(const MultiViewDataset& dataset, const TrainConfig& config, const EpochObserver& observer = {});

RunReport run_ablation(const MultiViewDataset& dataset, const TrainConfig& config, Variant variant,
                       const EpochObserver& observer = {});

// Mean squared error per recovered cell against ground truth, with the
// view-mean imputation error for comparison.
struct RecoveryError {
  double model = 0.0;
  double mean_imputation = 0.0;
  Index cells = 0;
};
RecoveryError recovery_error(const MultiViewDataset& masked, const std::vector<Matrix>& recovered,
                             const std::vector<Matrix>& truth);

}  // namespace crtc
