#include <crtc/completion.hpp>

#include <crtc/error.hpp>

#include <random>
#include <string>

namespace crtc {

using diff::Tape;
using diff::Var;

CompletionNet CompletionNet::create(std::vector<Index> dims, diff::Activation activation, std::uint64_t seed) {
  CompletionNet net;
  net.activation = activation;
  net.dims = std::move(dims);
  std::mt19937_64 rng(seed);
  for (Index v = 0; v < net.dims.size(); ++v) {
    const Index d = net.dims[v];
    net.params.add(weight_name(v), diff::glorot_uniform(d, d, rng));
    net.params.add(bias_name(v), Matrix::Zero(1, static_cast<Eigen::Index>(d)));
  }
  return net;
}

std::string CompletionNet::weight_name(Index v) { return "completion.v" + std::to_string(v) + ".w"; }
std::string CompletionNet::bias_name(Index v) { return "completion.v" + std::to_string(v) + ".b"; }

namespace {

std::vector<std::vector<Index>> neighbor_sets(const TransferGraph& graph, Index v) {
  std::vector<std::vector<Index>> sets;
  for (Index i : graph.missing_in_view(v)) sets.push_back(graph.at(i, v).neighbors);
  return sets;
}

Matrix zero_scalar() { return Matrix::Zero(1, 1); }

}  // namespace

RowVector recover_one(const CompletionNet& net, const MultiViewDataset& dataset, const TransferGraph& graph,
                      Index i, Index v) {
  const auto& neighbors = graph.at(i, v).neighbors;
  const Matrix& x = dataset.view(v);
  RowVector mean = RowVector::Zero(x.cols());
  for (Index j : neighbors) mean += x.row(static_cast<Eigen::Index>(j));
  mean /= static_cast<double>(neighbors.size());
  RowVector pre = mean * net.params.value(CompletionNet::weight_name(v)) +
                  net.params.value(CompletionNet::bias_name(v)).row(0);
  switch (net.activation) {
    case diff::Activation::Identity: return pre;
    case diff::Activation::Relu: return pre.cwiseMax(0.0);
    case diff::Activation::Tanh: return pre.array().tanh().matrix();
  }
  return pre;
}

Var recover_view(Tape& tape, const CompletionNet& net, const MultiViewDataset& dataset, const TransferGraph& graph,
                 Index v, bool trainable) {
  const auto sets = neighbor_sets(graph, v);
  Var x = tape.constant(dataset.view(v));
  Var agg = diff::gather_mean(x, sets);
  Var w = tape.bind(net.params, CompletionNet::weight_name(v), trainable);
  Var b = tape.bind(net.params, CompletionNet::bias_name(v), trainable);
  return diff::activate(diff::add_bias(diff::matmul(agg, w), b), net.activation);
}

std::vector<Var> completed_views(Tape& tape, const CompletionNet& net, const MultiViewDataset& dataset,
                                 const TransferGraph& graph, bool trainable) {
  std::vector<Var> out;
  for (Index v = 0; v < dataset.n_views(); ++v) {
    Var base = tape.constant(dataset.view(v));
    const auto& rows = graph.missing_in_view(v);
    if (rows.empty()) {
      out.push_back(base);
      continue;
    }
    Var rec = recover_view(tape, net, dataset, graph, v, trainable);
    out.push_back(diff::merge_rows(base, rec, rows));
  }
  return out;
}

Var loss_cr(Tape& tape, const CompletionNet& net, const MultiViewDataset& dataset, const TransferGraph& graph,
            bool trainable) {
  Var total = tape.constant(zero_scalar());
  for (Index v = 0; v < dataset.n_views(); ++v) {
    const auto& rows = graph.missing_in_view(v);
    if (rows.empty()) continue;
    Var rec = recover_view(tape, net, dataset, graph, v, trainable);
    std::vector<Index> repeat;
    std::vector<Index> targets;
    for (Index r = 0; r < rows.size(); ++r) {
      for (Index j : graph.at(rows[r], v).neighbors) {
        repeat.push_back(r);
        targets.push_back(j);
      }
    }
    Matrix target(static_cast<Eigen::Index>(targets.size()), dataset.view(v).cols());
    for (Index t = 0; t < targets.size(); ++t)
      target.row(static_cast<Eigen::Index>(t)) = dataset.view(v).row(static_cast<Eigen::Index>(targets[t]));
    Var diffs = diff::sub(diff::gather_rows(rec, repeat), tape.constant(std::move(target)));
    total = diff::add(total, diff::sum_squares(diffs));
  }
  return total;
}

double loss_cr(const CompletionNet& net, const MultiViewDataset& dataset, const TransferGraph& graph) {
  Tape tape;
  return loss_cr(tape, net, dataset, graph, false).scalar();
}

std::vector<std::pair<Index, Index>> relation_pairs(const TransferGraph& graph) {
  std::vector<std::pair<Index, Index>> pairs;
  for (const auto& [key, entry] : graph.entries())
    for (Index j : entry.neighbors) pairs.emplace_back(key.first, j);
  return pairs;
}

Var loss_cc(Var q, const TransferGraph& graph) {
  const auto pairs = relation_pairs(graph);
  return diff::pair_kl(q, pairs);
}

double loss_cc(const Matrix& q, const TransferGraph& graph) {
  Tape tape;
  return loss_cc(tape.constant(q), graph).scalar();
}

RecoveredDataset materialize(const CompletionNet& net, const MultiViewDataset& dataset, const TransferGraph& graph) {
  RecoveredDataset out;
  out.views = dataset.views();
  Tape tape;
  for (Index v = 0; v < dataset.n_views(); ++v) {
    const auto& rows = graph.missing_in_view(v);
    if (rows.empty()) continue;
    const Matrix& rec = recover_view(tape, net, dataset, graph, v, false).value();
    for (Index r = 0; r < rows.size(); ++r)
      out.views[v].row(static_cast<Eigen::Index>(rows[r])) = rec.row(static_cast<Eigen::Index>(r));
  }
  for (const auto& [key, entry] : graph.entries()) {
    (void)entry;
    out.recovered.push_back(key);
  }
  return out;
}

std::vector<double> pretrain_completion(CompletionNet& net, const MultiViewDataset& dataset,
                                        const TransferGraph& graph, int epochs, const diff::AdamOptions& adam) {
  if (epochs < 1) throw Error("pretrain_completion: epochs must be at least 1");
  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(epochs));
  for (int epoch = 0; epoch < epochs; ++epoch) {
    Tape tape;
    try {
      Var loss = loss_cr(tape, net, dataset, graph, true);
      trace.push_back(loss.scalar());
      tape.backward(loss);
      diff::adam_step(net.params, tape.gradients(net.params), adam);
    } catch (const NumericError& e) {
      throw NumericError("completion pretraining, epoch " + std::to_string(epoch) + ": " + e.what());
    }
  }
  return trace;
}

}  // namespace crtc
