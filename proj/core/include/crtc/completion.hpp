#pragma once

#include <crtc/dataset.hpp>
#include <crtc/diff.hpp>
#include <crtc/knn_transfer.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace crtc {

// One mean-aggregation layer per view: the recovered row of a missing cell is
// act(b_v + mean_{j in K} x_j W_v) over the transferred neighbour set K.
// W_v is D_v x D_v stored in row form (inputs multiply from the left).
struct CompletionNet {
  diff::ParamStore params;
  diff::Activation activation = diff::Activation::Identity;
  std::vector<Index> dims;

  static CompletionNet create(std::vector<Index> dims, diff::Activation activation, std::uint64_t seed);
  static std::string weight_name(Index v);
  static std::string bias_name(Index v);
};

// Views with every missing cell filled by the completion net. Cells that were
// available are bit-identical to the source dataset.
struct RecoveredDataset {
  std::vector<Matrix> views;
  std::vector<std::pair<Index, Index>> recovered;  // (instance, view), instance-major
};

RowVector recover_one(const CompletionNet& net, const MultiViewDataset& dataset, const TransferGraph& graph,
                      Index i, Index v);

// Recovered rows of view v, one per graph.missing_in_view(v), as a tape node.
diff::Var recover_view(diff::Tape& tape, const CompletionNet& net, const MultiViewDataset& dataset,
                       const TransferGraph& graph, Index v, bool trainable);

// Every view with its missing rows replaced by recover_view().
std::vector<diff::Var> completed_views(diff::Tape& tape, const CompletionNet& net, const MultiViewDataset& dataset,
                                       const TransferGraph& graph, bool trainable);

// Sum over missing (i, v) and neighbours j of ||x_hat_i^v - x_j^v||^2.
diff::Var loss_cr(diff::Tape& tape, const CompletionNet& net, const MultiViewDataset& dataset,
                  const TransferGraph& graph, bool trainable);
double loss_cr(const CompletionNet& net, const MultiViewDataset& dataset, const TransferGraph& graph);

// (anchor, neighbour) instance pairs, one per neighbour of every entry.
std::vector<std::pair<Index, Index>> relation_pairs(const TransferGraph& graph);

// Sum over missing (i, v) and neighbours j of KL(q_i || q_j); rows of q are
// indexed by instance id.
diff::Var loss_cc(diff::Var q, const TransferGraph& graph);
double loss_cc(const Matrix& q, const TransferGraph& graph);

RecoveredDataset materialize(const CompletionNet& net, const MultiViewDataset& dataset, const TransferGraph& graph);

// Full-batch Adam on loss_cr. Returns the loss before each step.
std::vector<double> pretrain_completion(CompletionNet& net, const MultiViewDataset& dataset,
                                        const TransferGraph& graph, int epochs, const diff::AdamOptions& adam);

}  // namespace crtc
