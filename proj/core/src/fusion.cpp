#include <crtc/fusion.hpp>

#include <crtc/error.hpp>

#include <cmath>
#include <random>

namespace crtc {

using diff::Tape;
using diff::Var;

Index default_embed_dim(int clusters) {
  const int bits = clusters <= 2 ? 1 : static_cast<int>(std::ceil(std::log2(static_cast<double>(clusters))));
  return std::min<Index>(64, static_cast<Index>(10 * bits));
}

namespace {
std::string layer_name(const char* kind, Index v, Index layer, const char* part) {
  return std::string("fusion.") + kind + std::to_string(v) + ".l" + std::to_string(layer) + "." + part;
}
}  // namespace

std::string FusionNet::encoder_weight(Index v, Index layer) { return layer_name("enc", v, layer, "w"); }
std::string FusionNet::encoder_bias(Index v, Index layer) { return layer_name("enc", v, layer, "b"); }
std::string FusionNet::decoder_weight(Index v, Index layer) { return layer_name("dec", v, layer, "w"); }
std::string FusionNet::decoder_bias(Index v, Index layer) { return layer_name("dec", v, layer, "b"); }
std::string FusionNet::attention_weight(Index v) { return "fusion.att" + std::to_string(v) + ".w"; }

FusionNet FusionNet::create(std::vector<Index> view_dims, const FusionOptions& options, std::uint64_t seed) {
  if (view_dims.empty()) throw Error("FusionNet: need at least one view");
  if (options.embed_dim == 0) throw Error("FusionNet: embedding size must be positive");
  FusionNet net;
  net.view_dims = std::move(view_dims);
  net.hidden = options.hidden;
  net.embed_dim = options.embed_dim;
  net.tau = std::sqrt(static_cast<double>(options.embed_dim));
  net.attention = options.attention;

  std::mt19937_64 rng(seed);
  for (Index v = 0; v < net.view_dims.size(); ++v) {
    std::vector<Index> widths{net.view_dims[v]};
    widths.insert(widths.end(), net.hidden.begin(), net.hidden.end());
    widths.push_back(net.embed_dim);
    for (Index l = 0; l + 1 < widths.size(); ++l) {
      net.params.add(encoder_weight(v, l), diff::glorot_uniform(widths[l], widths[l + 1], rng));
      net.params.add(encoder_bias(v, l), Matrix::Zero(1, static_cast<Eigen::Index>(widths[l + 1])));
    }
    for (Index l = 0; l + 1 < widths.size(); ++l) {
      const Index in = widths[widths.size() - 1 - l];
      const Index out = widths[widths.size() - 2 - l];
      net.params.add(decoder_weight(v, l), diff::glorot_uniform(in, out, rng));
      net.params.add(decoder_bias(v, l), Matrix::Zero(1, static_cast<Eigen::Index>(out)));
    }
    net.params.add(attention_weight(v), diff::glorot_uniform(net.embed_dim, net.embed_dim, rng));
  }
  return net;
}

Var encode(Tape& tape, const FusionNet& net, Var x, Index v, bool trainable) {
  Var h = x;
  const Index depth = net.encoder_depth();
  for (Index l = 0; l < depth; ++l) {
    Var w = tape.bind(net.params, FusionNet::encoder_weight(v, l), trainable);
    Var b = tape.bind(net.params, FusionNet::encoder_bias(v, l), trainable);
    h = diff::add_bias(diff::matmul(h, w), b);
    if (l + 1 < depth) h = diff::activate(h, diff::Activation::Relu);
  }
  return h;
}

Var decode(Tape& tape, const FusionNet& net, Var h, Index v, bool trainable) {
  Var x = h;
  const Index depth = net.encoder_depth();
  for (Index l = 0; l < depth; ++l) {
    Var w = tape.bind(net.params, FusionNet::decoder_weight(v, l), trainable);
    Var b = tape.bind(net.params, FusionNet::decoder_bias(v, l), trainable);
    x = diff::add_bias(diff::matmul(x, w), b);
    if (l + 1 < depth) x = diff::activate(x, diff::Activation::Relu);
  }
  return x;
}

FusionForward attention_fuse(Tape& tape, const FusionNet& net, std::span<const Var> embeddings, bool trainable) {
  const Index n_views = embeddings.size();
  if (n_views == 0) throw Error("attention_fuse: no embeddings");
  FusionForward out;
  out.embeddings.assign(embeddings.begin(), embeddings.end());
  const Eigen::Index n = embeddings.front().rows();

  if (net.attention) {
    Var plus = embeddings.front();
    for (Index v = 1; v < n_views; ++v) plus = diff::add(plus, embeddings[v]);
    plus = diff::scale(plus, 1.0 / static_cast<double>(n_views));
    std::vector<Var> scores;
    for (Index v = 0; v < n_views; ++v) {
      Var w = tape.bind(net.params, FusionNet::attention_weight(v), trainable);
      Var projected = diff::matmul(embeddings[v], w);
      scores.push_back(diff::scale(diff::row_dot(projected, plus), 1.0 / net.tau));
    }
    out.alpha = diff::row_softmax(diff::concat_cols(scores));
  } else {
    out.alpha = tape.constant(Matrix::Constant(n, static_cast<Eigen::Index>(n_views), 1.0 / static_cast<double>(n_views)));
  }

  Var fused = diff::scale_rows(embeddings[0], diff::column(out.alpha, 0));
  for (Index v = 1; v < n_views; ++v)
    fused = diff::add(fused, diff::scale_rows(embeddings[v], diff::column(out.alpha, static_cast<Eigen::Index>(v))));
  out.fused = fused;
  return out;
}

FusionForward fusion_forward(Tape& tape, const FusionNet& net, std::span<const Var> views, bool trainable) {
  if (views.size() != net.n_views()) throw Error("fusion_forward: view count mismatch");
  std::vector<Var> embeddings;
  for (Index v = 0; v < views.size(); ++v) embeddings.push_back(encode(tape, net, views[v], v, trainable));
  return attention_fuse(tape, net, embeddings, trainable);
}

Var loss_mr(Tape& tape, const FusionNet& net, std::span<const Var> views, Var fused, bool trainable) {
  Var total = tape.constant(Matrix::Zero(1, 1));
  for (Index v = 0; v < views.size(); ++v) {
    Var recon = decode(tape, net, fused, v, trainable);
    total = diff::add(total, diff::sum_squares(diff::sub(views[v], recon)));
  }
  return total;
}

namespace {
std::vector<Var> constants(Tape& tape, std::span<const Matrix> views) {
  std::vector<Var> out;
  for (const auto& m : views) out.push_back(tape.constant(m));
  return out;
}
}  // namespace

std::vector<Matrix> encode(const FusionNet& net, std::span<const Matrix> views) {
  Tape tape;
  std::vector<Matrix> out;
  for (Index v = 0; v < views.size(); ++v) out.push_back(encode(tape, net, tape.constant(views[v]), v, false).value());
  return out;
}

CommonRepresentation attention_fuse(const FusionNet& net, std::span<const Matrix> embeddings) {
  Tape tape;
  const auto vars = constants(tape, embeddings);
  const auto fwd = attention_fuse(tape, net, vars, false);
  return {fwd.fused.value(), fwd.alpha.value()};
}

CommonRepresentation fuse(const FusionNet& net, std::span<const Matrix> views) {
  Tape tape;
  const auto vars = constants(tape, views);
  const auto fwd = fusion_forward(tape, net, vars, false);
  return {fwd.fused.value(), fwd.alpha.value()};
}

double loss_mr(const FusionNet& net, std::span<const Matrix> views, const Matrix& fused) {
  Tape tape;
  const auto vars = constants(tape, views);
  return loss_mr(tape, net, vars, tape.constant(fused), false).scalar();
}

std::vector<double> pretrain_fusion(FusionNet& net, std::span<const Matrix> views, int epochs,
                                    const diff::AdamOptions& adam) {
  if (epochs < 1) throw Error("pretrain_fusion: epochs must be at least 1");
  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(epochs));
  for (int epoch = 0; epoch < epochs; ++epoch) {
    Tape tape;
    try {
      const auto vars = constants(tape, views);
      const auto fwd = fusion_forward(tape, net, vars, true);
      Var loss = loss_mr(tape, net, vars, fwd.fused, true);
      trace.push_back(loss.scalar());
      tape.backward(loss);
      diff::adam_step(net.params, tape.gradients(net.params), adam);
    } catch (const NumericError& e) {
      throw NumericError("fusion pretraining, epoch " + std::to_string(epoch) + ": " + e.what());
    }
  }
  return trace;
}

}  // namespace crtc
