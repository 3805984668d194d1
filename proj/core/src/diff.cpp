#include <crtc/diff.hpp>

#include <crtc/error.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace crtc::diff {
namespace {

std::string shape(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw NumericError(std::string(op) + ": shape mismatch " + shape(a) + " vs " + shape(b));
}

void require_finite(const Matrix& m, const char* op) {
  if (!m.allFinite()) throw NumericError(std::string(op) + ": non-finite value");
}

Tape& tape_of(Var a, Var b) {
  if (a.tape != b.tape || a.tape == nullptr) throw NumericError("operands live on different tapes");
  return *a.tape;
}

Matrix scalar_matrix(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return m;
}

constexpr char kMagic[8] = {'C', 'R', 'T', 'C', 'P', 'R', 'M', '1'};

template <typename T>
void put(std::ostream& out, T v) {
  static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes little-endian");
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError(DataErrc::Io, "truncated checkpoint");
  return v;
}

}  // namespace

const char* to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
  }
  return "identity";
}

Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::Identity;
  if (s == "relu") return Activation::Relu;
  if (s == "tanh") return Activation::Tanh;
  throw ConfigError("unknown activation '" + s + "' (identity, relu, tanh)");
}

// ParamStore ---------------------------------------------------------------

void ParamStore::add(const std::string& name, Matrix value) {
  if (contains(name)) throw Error("duplicate parameter name '" + name + "'");
  require_finite(value, name.c_str());
  Entry e;
  e.first_moment = Matrix::Zero(value.rows(), value.cols());
  e.second_moment = Matrix::Zero(value.rows(), value.cols());
  e.value = std::move(value);
  entries_.emplace(name, std::move(e));
}

Matrix& ParamStore::value(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw Error("unknown parameter '" + name + "'");
  return it->second.value;
}

const ParamStore::Entry& ParamStore::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw Error("unknown parameter '" + name + "'");
  return it->second;
}

bool ParamStore::same_values(const ParamStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (const auto& [name, e] : entries_) {
    auto it = other.entries_.find(name);
    if (it == other.entries_.end()) return false;
    const Matrix& o = it->second.value;
    if (o.rows() != e.value.rows() || o.cols() != e.value.cols()) return false;
    if (std::memcmp(o.data(), e.value.data(), sizeof(double) * static_cast<std::size_t>(o.size())) != 0)
      return false;
  }
  return true;
}

Matrix glorot_uniform(Index fan_in, Index fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix w(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(fan_out));
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
  return w;
}

void adam_step(ParamStore& store, const Gradients& grads, const AdamOptions& options) {
  for (const auto& [name, g] : grads) {
    const auto& e = store.entry(name);
    require_same_shape(e.value, g, "adam_step");
    if (!g.allFinite()) throw NumericError("adam_step: non-finite gradient for '" + name + "'");
  }
  for (const auto& [name, g] : grads) {
    auto& e = const_cast<ParamStore::Entry&>(store.entry(name));
    e.step += 1;
    e.first_moment = options.beta1 * e.first_moment + (1.0 - options.beta1) * g;
    e.second_moment = options.beta2 * e.second_moment + (1.0 - options.beta2) * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(options.beta1, static_cast<double>(e.step));
    const double c2 = 1.0 - std::pow(options.beta2, static_cast<double>(e.step));
    e.value.array() -= options.lr * (e.first_moment.array() / c1) /
                       ((e.second_moment.array() / c2).sqrt() + options.eps);
  }
}

void save_checkpoint(const std::filesystem::path& path, const ParamStore& store) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(DataErrc::Io, "cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put<std::uint64_t>(out, store.size());
  for (const auto& [name, e] : store.entries()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(e.value.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(e.value.cols()));
    out.write(reinterpret_cast<const char*>(e.value.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(e.value.size())));
  }
  if (!out) throw DataError(DataErrc::Io, "write failed: " + path.string());
}

ParamStore load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataErrc::Io, "cannot open " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw DataError(DataErrc::Io, path.string() + ": not a parameter checkpoint");
  const auto count = get<std::uint64_t>(in);
  ParamStore store;
  for (std::uint64_t t = 0; t < count; ++t) {
    const auto len = get<std::uint32_t>(in);
    std::string name(len, '\0');
    in.read(name.data(), len);
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
    if (!in) throw DataError(DataErrc::Io, "truncated checkpoint " + path.string());
    store.add(name, std::move(m));
  }
  return store;
}

// Tape ---------------------------------------------------------------------

const Matrix& Var::value() const { return tape->value(*this); }

double Var::scalar() const {
  const Matrix& m = value();
  if (m.rows() != 1 || m.cols() != 1) throw NumericError("scalar(): value is " + shape(m));
  return m(0, 0);
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::param(const ParamStore& store, const std::string& name) {
  Node n;
  n.value = store.value(name);
  n.requires_grad = true;
  n.store = &store;
  n.param_name = name;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::bind(const ParamStore& store, const std::string& name, bool trainable) {
  return trainable ? param(store, name) : constant(store.value(name));
}

Var Tape::record(Matrix value, std::initializer_list<Var> parents, Backward backward, const char* op) {
  return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()), std::move(backward), op);
}

Var Tape::record(Matrix value, std::span<const Var> parents, Backward backward, const char* op) {
  require_finite(value, op);
  Node n;
  n.value = std::move(value);
  for (Var p : parents) {
    if (p.tape != this) throw NumericError(std::string(op) + ": operand from another tape");
    n.requires_grad = n.requires_grad || nodes_[p.id].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

void Tape::accumulate(Var v, const Matrix& grad) {
  Node& n = nodes_[v.id];
  if (!n.requires_grad) return;
  if (!n.has_grad) {
    n.grad = grad;
    n.has_grad = true;
  } else {
    n.grad += grad;
  }
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw NumericError("backward: loss from another tape");
  if (value(loss).rows() != 1 || value(loss).cols() != 1)
    throw NumericError("backward: loss must be scalar, got " + shape(value(loss)));
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad.resize(0, 0);
  }
  accumulate(loss, scalar_matrix(1.0));
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.has_grad || !n.backward) continue;
    n.backward(*this, n.grad);
  }
}

Gradients Tape::gradients(const ParamStore& store) const {
  Gradients out;
  for (const auto& n : nodes_) {
    if (n.store != &store) continue;
    Matrix g = n.has_grad ? n.grad : Matrix::Zero(n.value.rows(), n.value.cols());
    auto it = out.find(n.param_name);
    if (it == out.end())
      out.emplace(n.param_name, std::move(g));
    else
      it->second += g;
  }
  return out;
}

// Primitive ops ------------------------------------------------------------

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  if (a.cols() != b.rows())
    throw NumericError("matmul: shape mismatch " + shape(a.value()) + " * " + shape(b.value()));
  Matrix out = a.value() * b.value();
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(a)) tp.accumulate(a, g * tp.value(b).transpose());
    if (tp.requires_grad(b)) tp.accumulate(b, tp.value(a).transpose() * g);
  }, "matmul");
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "add");
  return t.record(a.value() + b.value(), {a, b}, [a, b](Tape& tp, const Matrix& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  }, "add");
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  return t.record(a.value() - b.value(), {a, b}, [a, b](Tape& tp, const Matrix& g) {
    tp.accumulate(a, g);
    if (tp.requires_grad(b)) tp.accumulate(b, -g);
  }, "sub");
}

Var scale(Var a, double s) {
  return a.tape->record(s * a.value(), {a}, [a, s](Tape& tp, const Matrix& g) { tp.accumulate(a, s * g); },
                        "scale");
}

Var add_bias(Var x, Var bias) {
  Tape& t = tape_of(x, bias);
  if (bias.rows() != 1 || bias.cols() != x.cols())
    throw NumericError("add_bias: bias " + shape(bias.value()) + " for input " + shape(x.value()));
  Matrix out = x.value().rowwise() + bias.value().row(0);
  return t.record(std::move(out), {x, bias}, [x, bias](Tape& tp, const Matrix& g) {
    tp.accumulate(x, g);
    if (tp.requires_grad(bias)) tp.accumulate(bias, g.colwise().sum());
  }, "add_bias");
}

Var activate(Var x, Activation act) {
  switch (act) {
    case Activation::Identity:
      return x;
    case Activation::Relu: {
      Matrix out = x.value().cwiseMax(0.0);
      return x.tape->record(std::move(out), {x}, [x](Tape& tp, const Matrix& g) {
        Matrix dx = (tp.value(x).array() > 0.0).select(g.array(), 0.0).matrix();
        tp.accumulate(x, dx);
      }, "relu");
    }
    case Activation::Tanh: {
      Matrix out = x.value().array().tanh().matrix();
      Matrix saved = out;
      return x.tape->record(std::move(out), {x}, [x, y = std::move(saved)](Tape& tp, const Matrix& g) {
        Matrix dx = (g.array() * (1.0 - y.array().square())).matrix();
        tp.accumulate(x, dx);
      }, "tanh");
    }
  }
  return x;
}

Var row_softmax(Var x) {
  const Matrix& in = x.value();
  Matrix out(in.rows(), in.cols());
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    const double mx = in.row(r).maxCoeff();
    out.row(r) = (in.row(r).array() - mx).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  Matrix saved = out;
  return x.tape->record(std::move(out), {x}, [x, s = std::move(saved)](Tape& tp, const Matrix& g) {
    const Eigen::VectorXd inner = g.cwiseProduct(s).rowwise().sum();
    Matrix dx = s.array() * (g.colwise() - inner).array();
    tp.accumulate(x, dx);
  }, "row_softmax");
}

Var sum(Var x) {
  return x.tape->record(scalar_matrix(x.value().sum()), {x}, [x](Tape& tp, const Matrix& g) {
    tp.accumulate(x, Matrix::Constant(tp.value(x).rows(), tp.value(x).cols(), g(0, 0)));
  }, "sum");
}

Var sum_squares(Var x) {
  return x.tape->record(scalar_matrix(x.value().squaredNorm()), {x}, [x](Tape& tp, const Matrix& g) {
    tp.accumulate(x, (2.0 * g(0, 0)) * tp.value(x));
  }, "sum_squares");
}

Var gather_rows(Var x, std::span<const Index> rows) {
  const Matrix& in = x.value();
  Matrix out(static_cast<Eigen::Index>(rows.size()), in.cols());
  for (Index r = 0; r < rows.size(); ++r) {
    if (rows[r] >= static_cast<Index>(in.rows())) throw NumericError("gather_rows: row out of range");
    out.row(static_cast<Eigen::Index>(r)) = in.row(static_cast<Eigen::Index>(rows[r]));
  }
  std::vector<Index> idx(rows.begin(), rows.end());
  return x.tape->record(std::move(out), {x}, [x, idx = std::move(idx)](Tape& tp, const Matrix& g) {
    Matrix dx = Matrix::Zero(tp.value(x).rows(), tp.value(x).cols());
    for (Index r = 0; r < idx.size(); ++r) dx.row(static_cast<Eigen::Index>(idx[r])) += g.row(static_cast<Eigen::Index>(r));
    tp.accumulate(x, dx);
  }, "gather_rows");
}

Var gather_mean(Var x, std::span<const std::vector<Index>> sets) {
  const Matrix& in = x.value();
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(sets.size()), in.cols());
  for (Index r = 0; r < sets.size(); ++r) {
    if (sets[r].empty()) throw NumericError("gather_mean: empty neighbour set");
    for (Index j : sets[r]) {
      if (j >= static_cast<Index>(in.rows())) throw NumericError("gather_mean: row out of range");
      out.row(static_cast<Eigen::Index>(r)) += in.row(static_cast<Eigen::Index>(j));
    }
    out.row(static_cast<Eigen::Index>(r)) /= static_cast<double>(sets[r].size());
  }
  std::vector<std::vector<Index>> copy(sets.begin(), sets.end());
  return x.tape->record(std::move(out), {x}, [x, sets = std::move(copy)](Tape& tp, const Matrix& g) {
    Matrix dx = Matrix::Zero(tp.value(x).rows(), tp.value(x).cols());
    for (Index r = 0; r < sets.size(); ++r) {
      const double w = 1.0 / static_cast<double>(sets[r].size());
      for (Index j : sets[r]) dx.row(static_cast<Eigen::Index>(j)) += w * g.row(static_cast<Eigen::Index>(r));
    }
    tp.accumulate(x, dx);
  }, "gather_mean");
}

Var merge_rows(Var base, Var y, std::span<const Index> rows) {
  Tape& t = tape_of(base, y);
  if (base.cols() != y.cols() || static_cast<Index>(y.rows()) != rows.size())
    throw NumericError("merge_rows: shape mismatch " + shape(base.value()) + " <- " + shape(y.value()));
  Matrix out = base.value();
  for (Index r = 0; r < rows.size(); ++r) {
    if (rows[r] >= static_cast<Index>(out.rows())) throw NumericError("merge_rows: row out of range");
    out.row(static_cast<Eigen::Index>(rows[r])) = y.value().row(static_cast<Eigen::Index>(r));
  }
  std::vector<Index> idx(rows.begin(), rows.end());
  return t.record(std::move(out), {base, y}, [base, y, idx = std::move(idx)](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(base)) {
      Matrix db = g;
      for (Index r : idx) db.row(static_cast<Eigen::Index>(r)).setZero();
      tp.accumulate(base, db);
    }
    if (tp.requires_grad(y)) {
      Matrix dy(static_cast<Eigen::Index>(idx.size()), g.cols());
      for (Index r = 0; r < idx.size(); ++r) dy.row(static_cast<Eigen::Index>(r)) = g.row(static_cast<Eigen::Index>(idx[r]));
      tp.accumulate(y, dy);
    }
  }, "merge_rows");
}

Var row_dot(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "row_dot");
  Matrix out = a.value().cwiseProduct(b.value()).rowwise().sum();
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(a)) tp.accumulate(a, tp.value(b).array().colwise() * g.col(0).array());
    if (tp.requires_grad(b)) tp.accumulate(b, tp.value(a).array().colwise() * g.col(0).array());
  }, "row_dot");
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw NumericError("concat_cols: no parts");
  Tape* t = parts.front().tape;
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (Var p : parts) {
    if (p.tape != t) throw NumericError("concat_cols: operands on different tapes");
    if (p.rows() != rows) throw NumericError("concat_cols: row count mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (Var p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  std::vector<Var> copy(parts.begin(), parts.end());
  return t->record(std::move(out), parts, [copy](Tape& tp, const Matrix& g) {
    Eigen::Index off = 0;
    for (Var p : copy) {
      const Eigen::Index c = tp.value(p).cols();
      if (tp.requires_grad(p)) tp.accumulate(p, g.middleCols(off, c));
      off += c;
    }
  }, "concat_cols");
}

Var column(Var x, Eigen::Index c) {
  if (c < 0 || c >= x.cols()) throw NumericError("column: index out of range");
  Matrix out = x.value().col(c);
  return x.tape->record(std::move(out), {x}, [x, c](Tape& tp, const Matrix& g) {
    Matrix dx = Matrix::Zero(tp.value(x).rows(), tp.value(x).cols());
    dx.col(c) = g.col(0);
    tp.accumulate(x, dx);
  }, "column");
}

Var scale_rows(Var x, Var s) {
  Tape& t = tape_of(x, s);
  if (s.cols() != 1 || s.rows() != x.rows())
    throw NumericError("scale_rows: scale " + shape(s.value()) + " for " + shape(x.value()));
  Matrix out = x.value().array().colwise() * s.value().col(0).array();
  return t.record(std::move(out), {x, s}, [x, s](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(x)) tp.accumulate(x, g.array().colwise() * tp.value(s).col(0).array());
    if (tp.requires_grad(s)) tp.accumulate(s, g.cwiseProduct(tp.value(x)).rowwise().sum());
  }, "scale_rows");
}

Var pairwise_sq_dist(Var a, Var b) {
  Tape& t = tape_of(a, b);
  if (a.cols() != b.cols())
    throw NumericError("pairwise_sq_dist: width mismatch " + shape(a.value()) + " vs " + shape(b.value()));
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  Matrix out(av.rows(), bv.rows());
  for (Eigen::Index i = 0; i < av.rows(); ++i)
    for (Eigen::Index j = 0; j < bv.rows(); ++j) out(i, j) = (av.row(i) - bv.row(j)).squaredNorm();
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, const Matrix& g) {
    const Matrix& av = tp.value(a);
    const Matrix& bv = tp.value(b);
    if (tp.requires_grad(a)) {
      Matrix da = 2.0 * (av.array().colwise() * g.rowwise().sum().array()).matrix() - 2.0 * g * bv;
      tp.accumulate(a, da);
    }
    if (tp.requires_grad(b)) {
      const Eigen::VectorXd colsum = g.colwise().sum().transpose();
      Matrix db = 2.0 * (bv.array().colwise() * colsum.array()).matrix() - 2.0 * g.transpose() * av;
      tp.accumulate(b, db);
    }
  }, "pairwise_sq_dist");
}

Var recip1p(Var x) {
  Matrix out = (1.0 + x.value().array()).inverse().matrix();
  Matrix saved = out;
  return x.tape->record(std::move(out), {x}, [x, y = std::move(saved)](Tape& tp, const Matrix& g) {
    tp.accumulate(x, (-g.array() * y.array().square()).matrix());
  }, "recip1p");
}

Var row_normalize(Var x) {
  const Eigen::VectorXd sums = x.value().rowwise().sum();
  Matrix out = x.value().array().colwise() / sums.array();
  Matrix saved = out;
  return x.tape->record(std::move(out), {x}, [x, y = std::move(saved), sums](Tape& tp, const Matrix& g) {
    const Eigen::VectorXd inner = g.cwiseProduct(y).rowwise().sum();
    Matrix dx = (g.colwise() - inner).array().colwise() / sums.array();
    tp.accumulate(x, dx);
  }, "row_normalize");
}

Var kl_divergence(const Matrix& p, Var q) {
  require_same_shape(p, q.value(), "kl_divergence");
  const Matrix& qv = q.value();
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j)
      if (p(i, j) > 0.0) total += p(i, j) * (std::log(p(i, j)) - std::log(std::max(qv(i, j), kLogClamp)));
  return q.tape->record(scalar_matrix(total), {q}, [q, p](Tape& tp, const Matrix& g) {
    const Matrix& qv = tp.value(q);
    Matrix dq = Matrix::Zero(qv.rows(), qv.cols());
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      for (Eigen::Index j = 0; j < p.cols(); ++j)
        if (p(i, j) > 0.0 && qv(i, j) >= kLogClamp) dq(i, j) = -g(0, 0) * p(i, j) / qv(i, j);
    tp.accumulate(q, dq);
  }, "kl_divergence");
}

Var pair_kl(Var q, std::span<const std::pair<Index, Index>> pairs) {
  const Matrix& qv = q.value();
  const Matrix logq = qv.cwiseMax(kLogClamp).array().log().matrix();
  double total = 0.0;
  for (const auto& [a, j] : pairs) {
    if (a >= static_cast<Index>(qv.rows()) || j >= static_cast<Index>(qv.rows()))
      throw NumericError("pair_kl: row out of range");
    const auto ra = static_cast<Eigen::Index>(a);
    const auto rj = static_cast<Eigen::Index>(j);
    total += (qv.row(ra).array() * (logq.row(ra) - logq.row(rj)).array()).sum();
  }
  std::vector<std::pair<Index, Index>> copy(pairs.begin(), pairs.end());
  return q.tape->record(scalar_matrix(total), {q}, [q, copy = std::move(copy)](Tape& tp, const Matrix& g) {
    const Matrix& qv = tp.value(q);
    const Matrix clamped = qv.cwiseMax(kLogClamp);
    const Matrix logq = clamped.array().log().matrix();
    Matrix dq = Matrix::Zero(qv.rows(), qv.cols());
    const double s = g(0, 0);
    for (const auto& [a, j] : copy) {
      const auto ra = static_cast<Eigen::Index>(a);
      const auto rj = static_cast<Eigen::Index>(j);
      for (Eigen::Index k = 0; k < qv.cols(); ++k) {
        const double qa = qv(ra, k);
        double da = logq(ra, k) - logq(rj, k);
        if (qa >= kLogClamp) da += 1.0;
        dq(ra, k) += s * da;
        if (qv(rj, k) >= kLogClamp) dq(rj, k) -= s * qa / clamped(rj, k);
      }
    }
    tp.accumulate(q, dq);
  }, "pair_kl");
}

// Gradient check -------------------------------------------------------------

GradCheckReport check_gradients(ParamStore& store, const std::function<Var(Tape&)>& loss_fn, double h,
                                double rtol, double atol) {
  Gradients analytic;
  {
    Tape tape;
    Var loss = loss_fn(tape);
    tape.backward(loss);
    analytic = tape.gradients(store);
  }
  auto eval = [&] {
    Tape tape;
    return loss_fn(tape).scalar();
  };

  GradCheckReport report;
  double worst_excess = -1.0;
  for (const auto& [name, entry] : store.entries()) {
    (void)entry;
    Matrix& value = store.value(name);
    const auto it = analytic.find(name);
    for (Eigen::Index r = 0; r < value.rows(); ++r) {
      for (Eigen::Index c = 0; c < value.cols(); ++c) {
        const double saved = value(r, c);
        value(r, c) = saved + h;
        const double up = eval();
        value(r, c) = saved - h;
        const double down = eval();
        value(r, c) = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double a = it == analytic.end() ? 0.0 : it->second(r, c);
        const double err = std::abs(a - numeric);
        const double allowed = std::max(atol, rtol * std::max(std::abs(a), std::abs(numeric)));
        ++report.checked;
        report.max_abs_error = std::max(report.max_abs_error, err);
        if (err > allowed) report.ok = false;
        if (err - allowed > worst_excess) {
          worst_excess = err - allowed;
          std::ostringstream os;
          os.precision(12);
          os << name << "[" << r << "," << c << "]: analytic " << a << " vs numeric " << numeric;
          report.worst = os.str();
        }
      }
    }
  }
  return report;
}

}  // namespace crtc::diff
