#pragma once

#include <crtc/matrix.hpp>

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

// Small reverse-mode differentiation substrate over dense row-major matrices.
// A Tape records one forward evaluation; backward() walks it in reverse and
// accumulates gradients into the nodes that depend on trainable parameters.
namespace crtc::diff {

enum class Activation { Identity, Relu, Tanh };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);  // throws ConfigError

// Named parameters plus Adam state. Names are unique; iteration order is
// lexicographic so every traversal is deterministic.
class ParamStore {
 public:
  struct Entry {
    Matrix value;
    Matrix first_moment;
    Matrix second_moment;
    std::int64_t step = 0;
  };

  void add(const std::string& name, Matrix value);
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  const Matrix& value(const std::string& name) const { return entry(name).value; }
  Matrix& value(const std::string& name);
  const Entry& entry(const std::string& name) const;
  const std::map<std::string, Entry>& entries() const noexcept { return entries_; }
  Index size() const noexcept { return entries_.size(); }

  // Values only; optimizer state is not compared.
  bool same_values(const ParamStore& other) const;

 private:
  std::map<std::string, Entry> entries_;
};

using Gradients = std::map<std::string, Matrix>;

// fan_in x fan_out weights uniform in +-sqrt(6 / (fan_in + fan_out)).
Matrix glorot_uniform(Index fan_in, Index fan_out, std::mt19937_64& rng);

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam on every parameter named in grads. Throws NumericError
// on a non-finite gradient or a shape mismatch before touching any state.
void adam_step(ParamStore& store, const Gradients& grads, const AdamOptions& options);

// Binary checkpoint: magic, count, then per tensor name, shape and row-major
// little-endian float64 values. Round-trips bit-exactly.
void save_checkpoint(const std::filesystem::path& path, const ParamStore& store);
ParamStore load_checkpoint(const std::filesystem::path& path);

class Tape;

// Handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  // Gradient-tracked leaf bound to store[name].
  Var param(const ParamStore& store, const std::string& name);
  // param() when trainable, otherwise a constant copy of the current value.
  Var bind(const ParamStore& store, const std::string& name, bool trainable);

  // Records an op result. `backward` runs only if some parent needs a gradient.
  Var record(Matrix value, std::initializer_list<Var> parents, Backward backward, const char* op);
  Var record(Matrix value, std::span<const Var> parents, Backward backward, const char* op);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  void accumulate(Var v, const Matrix& grad);

  // loss must be 1x1. Gradients are reset before the sweep.
  void backward(Var loss);
  // Gradients of the last backward() for the parameters that belong to store.
  Gradients gradients(const ParamStore& store) const;

  Index size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool has_grad = false;
    Backward backward;
    const ParamStore* store = nullptr;
    std::string param_name;
  };
  std::deque<Node> nodes_;
};

// Primitive operations. All shapes are checked and every result is checked
// for finiteness (NumericError otherwise).
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double s);
Var add_bias(Var x, Var bias);  // bias is 1 x cols, broadcast over rows
Var activate(Var x, Activation act);
Var row_softmax(Var x);
Var sum(Var x);          // 1 x 1
Var sum_squares(Var x);  // 1 x 1
Var gather_rows(Var x, std::span<const Index> rows);
// Row r of the result is the mean of the rows listed in sets[r] (each nonempty).
Var gather_mean(Var x, std::span<const std::vector<Index>> sets);
// Copy of base with base.row(rows[r]) replaced by y.row(r).
Var merge_rows(Var base, Var y, std::span<const Index> rows);
Var row_dot(Var a, Var b);  // N x 1
Var concat_cols(std::span<const Var> parts);
Var column(Var x, Eigen::Index c);
Var scale_rows(Var x, Var s);  // s is N x 1
Var pairwise_sq_dist(Var a, Var b);
Var recip1p(Var x);  // 1 / (1 + x)
Var row_normalize(Var x);

inline constexpr double kLogClamp = 1e-10;

// sum_ij p_ij log(p_ij / q_ij) with q clamped below at kLogClamp; p is constant.
Var kl_divergence(const Matrix& p, Var q);
// sum over (a, j) of KL(q_a || q_j) between rows of q, both sides trainable.
Var pair_kl(Var q, std::span<const std::pair<Index, Index>> pairs);

struct GradCheckReport {
  bool ok = true;
  Index checked = 0;
  double max_abs_error = 0.0;
  std::string worst;  // "name[r,c]: analytic vs numeric"
};

// Compares backward() gradients with central differences on every entry of
// every parameter in store. loss_fn must build its graph with tape.param().
GradCheckReport check_gradients(ParamStore& store, const std::function<Var(Tape&)>& loss_fn,
                                double h = 1e-5, double rtol = 1e-4, double atol = 1e-6);

}  // namespace crtc::diff
