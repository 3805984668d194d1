#pragma once

#include <crtc/diff.hpp>
#include <crtc/matrix.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace crtc {

struct FusionOptions {
  std::vector<Index> hidden{500};  // encoder hidden widths; decoders mirror them
  Index embed_dim = 20;
  bool attention = true;  // false fuses with fixed weights 1/V
};

// Default shared embedding size: 10 * ceil(log2 C), capped at 64.
Index default_embed_dim(int clusters);

// View-specific encoders D_v -> hidden -> d (relu inside, linear output),
// mirrored decoders d -> hidden -> D_v, and one d x d attention projection per
// view. Attention scores are <h_v W_v, h_plus> / tau with tau = sqrt(d).
struct FusionNet {
  diff::ParamStore params;
  std::vector<Index> view_dims;
  std::vector<Index> hidden;
  Index embed_dim = 0;
  double tau = 1.0;
  bool attention = true;

  static FusionNet create(std::vector<Index> view_dims, const FusionOptions& options, std::uint64_t seed);

  Index n_views() const noexcept { return view_dims.size(); }
  Index encoder_depth() const noexcept { return hidden.size() + 1; }
  static std::string encoder_weight(Index v, Index layer);
  static std::string encoder_bias(Index v, Index layer);
  static std::string decoder_weight(Index v, Index layer);
  static std::string decoder_bias(Index v, Index layer);
  static std::string attention_weight(Index v);
};

// Fused common representation (N x d) and attention weights (N x V).
struct CommonRepresentation {
  Matrix fused;
  Matrix alpha;
};

struct FusionForward {
  std::vector<diff::Var> embeddings;
  diff::Var alpha;
  diff::Var fused;
};

diff::Var encode(diff::Tape& tape, const FusionNet& net, diff::Var x, Index v, bool trainable);
diff::Var decode(diff::Tape& tape, const FusionNet& net, diff::Var h, Index v, bool trainable);
FusionForward attention_fuse(diff::Tape& tape, const FusionNet& net, std::span<const diff::Var> embeddings,
                             bool trainable);
FusionForward fusion_forward(diff::Tape& tape, const FusionNet& net, std::span<const diff::Var> views,
                             bool trainable);
// Sum over views and instances of ||x_i^v - dec_v(fused_i)||^2.
diff::Var loss_mr(diff::Tape& tape, const FusionNet& net, std::span<const diff::Var> views, diff::Var fused,
                  bool trainable);

std::vector<Matrix> encode(const FusionNet& net, std::span<const Matrix> views);
CommonRepresentation attention_fuse(const FusionNet& net, std::span<const Matrix> embeddings);
CommonRepresentation fuse(const FusionNet& net, std::span<const Matrix> views);
double loss_mr(const FusionNet& net, std::span<const Matrix> views, const Matrix& fused);

// Full-batch Adam on loss_mr. Returns the loss before each step.
std::vector<double> pretrain_fusion(FusionNet& net, std::span<const Matrix> views, int epochs,
                                    const diff::AdamOptions& adam);

}  // namespace crtc
