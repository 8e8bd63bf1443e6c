#include "ahp/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "ahp/kernels.hpp"

namespace ahp {

void Parameter::zero_grad() {
  if (!grad.same_shape(value)) grad = Matrix(value.rows, value.cols);
  std::fill(grad.data.begin(), grad.data.end(), 0.0);
  grad_ready = false;
}

Parameter& ParamStore::add(const std::string& name, Matrix init) {
  if (params_.contains(name)) throw InvariantError("parameter '" + name + "' registered twice");
  auto& p = params_[name];
  p.name = name;
  p.value = std::move(init);
  p.zero_grad();
  return p;
}

Parameter& ParamStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw InvariantError("unknown parameter '" + name + "'");
  return it->second;
}

const Parameter& ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw InvariantError("unknown parameter '" + name + "'");
  return it->second;
}

std::map<std::string, Matrix> ParamStore::snapshot() const {
  std::map<std::string, Matrix> out;
  for (const auto& [name, p] : params_) out.emplace(name, p.value);
  return out;
}

void ParamStore::restore(const std::map<std::string, Matrix>& values) {
  if (values.size() != params_.size()) throw InvariantError("snapshot parameter count mismatch");
  for (auto& [name, p] : params_) {
    auto it = values.find(name);
    if (it == values.end()) throw InvariantError("snapshot lacks parameter '" + name + "'");
    if (!it->second.same_shape(p.value)) throw ShapeError("snapshot shape mismatch for '" + name + "'");
    p.value = it->second;
  }
}

// ---------------------------------------------------------------------------

namespace {

void check_finite(const Matrix& m, const char* op) {
  // x * 0 is zero for finite x and NaN otherwise. Four partial sums let the
  // compiler vectorize the scan.
  const double* p = m.data.data();
  const std::size_t n = m.data.size();
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    for (std::size_t j = 0; j < 4; ++j) acc[j] += p[i + j] * 0.0;
  double total = acc[0] + acc[1] + acc[2] + acc[3];
  for (; i < n; ++i) total += p[i] * 0.0;
  if (total != 0.0) throw NumericError(std::string("non-finite value produced by ") + op);
}

void add_into(Matrix& dst, const Matrix& src) {
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

void shape_check(bool ok, const char* op, const Matrix& a, const Matrix& b) {
  if (!ok)
    throw ShapeError(std::string(op) + ": incompatible shapes " + std::to_string(a.rows) + "x" +
                     std::to_string(a.cols) + " and " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
}

}  // namespace

const Tape::Node& Tape::node(Var v) const { return nodes_[checked(v)]; }

std::uint32_t Tape::checked(Var v) const {
  if (v.generation != generation_ || v.index >= nodes_.size())
    throw Error("stale Var: the tape was cleared (backward already ran?)");
  return v.index;
}

Matrix& Tape::grad_of(std::uint32_t i) {
  auto& n = nodes_[i];
  if (n.grad.empty() && !n.val().empty()) n.grad = Matrix(n.val().rows, n.val().cols);
  return n.grad;
}

Var Tape::push(Matrix value, bool requires_grad, const char* op) {
  check_finite(value, op);
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad && grad_enabled_;
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1), generation_};
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, "constant"); }

Var Tape::param(Parameter& p, bool trainable) {
  // Not scanned for NaN here: the first primitive consuming it checks its output.
  Node n;
  n.borrowed = &p.value;
  n.requires_grad = trainable && grad_enabled_;
  nodes_.push_back(std::move(n));
  const Var v{static_cast<std::uint32_t>(nodes_.size() - 1), generation_};
  if (nodes_[v.index].requires_grad) nodes_[v.index].param = &p;
  return v;
}

const Matrix& Tape::value(Var v) const { return node(v).val(); }

double Tape::scalar(Var v) const {
  const auto& m = value(v);
  if (m.rows != 1 || m.cols != 1) throw ShapeError("scalar(): value is not 1x1");
  return m.data[0];
}

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

Var Tape::matmul(Var a, Var b) {
  const auto ia = checked(a), ib = checked(b);
  Var out = push(kernels::gemm(nodes_[ia].val(), nodes_[ib].val()),
                 nodes_[ia].requires_grad || nodes_[ib].requires_grad, "matmul");
  const auto io = out.index;
  if (nodes_[io].requires_grad) {
    nodes_[io].backward = [this, ia, ib, io] {
      const Matrix& g = nodes_[io].grad;
      if (nodes_[ia].requires_grad) kernels::gemm_nt_accumulate(g, nodes_[ib].val(), grad_of(ia));
      if (nodes_[ib].requires_grad) kernels::gemm_tn_accumulate(nodes_[ia].val(), g, grad_of(ib));
    };
  }
  return out;
}

Var Tape::spmm(std::shared_ptr<const SparseOperator> s, Var x) {
  const auto ix = checked(x);
  Var out = push(kernels::spmm(s->forward, nodes_[ix].val()), nodes_[ix].requires_grad, "spmm");
  const auto io = out.index;
  if (nodes_[io].requires_grad) {
    nodes_[io].backward = [this, s = std::move(s), ix, io] {
      kernels::spmm_accumulate(s->transposed, nodes_[io].grad, grad_of(ix));
    };
  }
  return out;
}

Var Tape::add_bias(Var a, Var bias) {
  const auto ia = checked(a), ib = checked(bias);
  const Matrix& av = nodes_[ia].val();
  const Matrix& bv = nodes_[ib].val();
  shape_check(bv.rows == 1 && bv.cols == av.cols, "add_bias", av, bv);
  Matrix r = av;
  for (std::size_t i = 0; i < r.rows; ++i)
    for (std::size_t j = 0; j < r.cols; ++j) r(i, j) += bv.data[j];
  Var out = push(std::move(r), nodes_[ia].requires_grad || nodes_[ib].requires_grad, "add_bias");
  const auto io = out.index;
  if (nodes_[io].requires_grad) {
    nodes_[io].backward = [this, ia, ib, io] {
      const Matrix& g = nodes_[io].grad;
      if (nodes_[ia].requires_grad) add_into(grad_of(ia), g);
      if (nodes_[ib].requires_grad) {
        Matrix& gb = grad_of(ib);
        for (std::size_t i = 0; i < g.rows; ++i)
          for (std::size_t j = 0; j < g.cols; ++j) gb.data[j] += g(i, j);
      }
    };
  }
  return out;
}

Var Tape::add(Var a, Var b) {
  const auto ia = checked(a), ib = checked(b);
  shape_check(nodes_[ia].val().same_shape(nodes_[ib].val()), "add", nodes_[ia].val(), nodes_[ib].val());
  Matrix r = nodes_[ia].val();
  add_into(r, nodes_[ib].val());
  Var out = push(std::move(r), nodes_[ia].requires_grad || nodes_[ib].requires_grad, "add");
  const auto io = out.index;
  if (nodes_[io].requires_grad) {
    nodes_[io].backward = [this, ia, ib, io] {
      if (nodes_[ia].requires_grad) add_into(grad_of(ia), nodes_[io].grad);
      if (nodes_[ib].requires_grad) add_into(grad_of(ib), nodes_[io].grad);
    };
  }
  return out;
}

Var Tape::sub(Var a, Var b) {
  const auto ia = checked(a), ib = checked(b);
  shape_check(nodes_[ia].val().same_shape(nodes_[ib].val()), "sub", nodes_[ia].val(), nodes_[ib].val());
  Matrix r = nodes_[ia].val();
  for (std::size_t i = 0; i < r.data.size(); ++i) r.data[i] -= nodes_[ib].val().data[i];
  Var out = push(std::move(r), nodes_[ia].requires_grad || nodes_[ib].requires_grad, "sub");
  const auto io = out.index;
  if (nodes_[io].requires_grad) {
    nodes_[io].backward = [this, ia, ib, io] {
      const Matrix& g = nodes_[io].grad;
      if (nodes_[ia].requires_grad) add_into(grad_of(ia), g);
      if (nodes_[ib].requires_grad) {
        Matrix& gb = grad_of(ib);
        for (std::size_t i = 0; i < g.data.size(); ++i) gb.data[i] -= g.data[i];
      }
    };
  }
  return out;
}

Var Tape::neg(Var a) { return scale(a, -1.0); }

Var Tape::scale(Var a, double s) {
  const auto ia = checked(a);
  Matrix r = nodes_[ia].val();
  for (double& x : r.data) x *= s;
  Var out = push(std::move(r), nodes_[ia].requires_grad, "scale");
  const auto io = out.index;
  if (nodes_[io].requires_grad) {
    nodes_[io].backward = [this, ia, io, s] {
      Matrix& ga = grad_of(ia);
      const Matrix& g = nodes_[io].grad;
      for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += s * g.data[i];
    };
  }
  return out;
}

Var Tape::relu(Var a) { return leaky_relu(a, 0.0); }

Var Tape::leaky_relu(Var a, double slope) {
  const auto ia = checked(a);
  Matrix r = nodes_[ia].val();
  for (double& x : r.data)
    if (x < 0.0) x *= slope;
  Var out = push(std::move(r), nodes_[ia].requires_grad, slope == 0.0 ? "relu" : "leaky_relu");
  const auto io = out.index;
  if (nodes_[io].requires_grad) {
    nodes_[io].backward = [this, ia, io, slope] {
      Matrix& ga = grad_of(ia);
      const Matrix& g = nodes_[io].grad;
      const Matrix& x = nodes_[ia].val();
      for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += x.data[i] > 0.0 ? g.data[i] : slope * g.data[i];
    };
  }
  return out;
}

Var Tape::sigmoid(Var a) {
  const auto ia = checked(a);
  Matrix r = nodes_[ia].val();
  for (double& x : r.data) x = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  Var out = push(std::move(r), nodes_[ia].requires_grad, "sigmoid");
  const auto io = out.index;
  if (nodes_[io].requires_grad) {
    nodes_[io].backward = [this, ia, io] {
      Matrix& ga = grad_of(ia);
      const Matrix& g = nodes_[io].grad;
      const Matrix& y = nodes_[io].val();
      for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i] * y.data[i] * (1.0 - y.data[i]);
    };
  }
  return out;
}

Var Tape::gather_rows(Var a, std::span<const std::uint32_t> rows) {
  const auto ia = checked(a);
  const Matrix& av = nodes_[ia].val();
  Matrix r(rows.size(), av.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= av.rows) throw ShapeError("gather_rows: row index out of range");
    std::copy(av.row(rows[i]).begin(), av.row(rows[i]).end(), r.row(i).begin());
  }
  Var out = push(std::move(r), nodes_[ia].requires_grad, "gather_rows");
  const auto io = out.index;
  if (nodes_[io].requires_grad) {
    nodes_[io].backward = [this, ia, io, rows = std::vector<std::uint32_t>(rows.begin(), rows.end())] {
      Matrix& ga = grad_of(ia);
      const Matrix& g = nodes_[io].grad;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        auto src = g.row(i);
        auto dst = ga.row(rows[i]);
        for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
      }
    };
  }
  return out;
}

Var Tape::gather_cols(Var a, std::span<const std::uint32_t> cols) {
  const auto ia = checked(a);
  const Matrix& av = nodes_[ia].val();
  Matrix r(av.rows, cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] >= av.cols) throw ShapeError("gather_cols: column index out of range");
    for (std::size_t i = 0; i < av.rows; ++i) r(i, j) = av(i, cols[j]);
  }
  Var out = push(std::move(r), nodes_[ia].requires_grad, "gather_cols");
  const auto io = out.index;
  if (nodes_[io].requires_grad) {
    nodes_[io].backward = [this, ia, io, cols = std::vector<std::uint32_t>(cols.begin(), cols.end())] {
      Matrix& ga = grad_of(ia);
      const Matrix& g = nodes_[io].grad;
      for (std::size_t i = 0; i < g.rows; ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) ga(i, cols[j]) += g(i, j);
    };
  }
  return out;
}

Var Tape::transpose(Var a) {
  const auto ia = checked(a);
  const Matrix& av = nodes_[ia].val();
  Matrix r(av.cols, av.rows);
  for (std::size_t i = 0; i < av.rows; ++i)
    for (std::size_t j = 0; j < av.cols; ++j) r(j, i) = av(i, j);
  Var out = push(std::move(r), nodes_[ia].requires_grad, "transpose");
  const auto io = out.index;
  if (nodes_[io].requires_grad) {
    nodes_[io].backward = [this, ia, io] {
      Matrix& ga = grad_of(ia);
      const Matrix& g = nodes_[io].grad;
      for (std::size_t i = 0; i < g.rows; ++i)
        for (std::size_t j = 0; j < g.cols; ++j) ga(j, i) += g(i, j);
    };
  }
  return out;
}

Var Tape::row_scale(Var a, Var s) {
  const auto ia = checked(a), is = checked(s);
  const Matrix& av = nodes_[ia].val();
  const Matrix& sv = nodes_[is].val();
  shape_check(sv.rows == av.rows && sv.cols == 1, "row_scale", av, sv);
  Matrix r = av;
  for (std::size_t i = 0; i < r.rows; ++i)
    for (double& x : r.row(i)) x *= sv.data[i];
  Var out = push(std::move(r), nodes_[ia].requires_grad || nodes_[is].requires_grad, "row_scale");
  const auto io = out.index;
  if (nodes_[io].requires_grad) {
    nodes_[io].backward = [this, ia, is, io] {
      const Matrix& g = nodes_[io].grad;
      const Matrix& x = nodes_[ia].val();
      const Matrix& sc = nodes_[is].val();
      if (nodes_[ia].requires_grad) {
        Matrix& ga = grad_of(ia);
        for (std::size_t i = 0; i < g.rows; ++i)
          for (std::size_t j = 0; j < g.cols; ++j) ga(i, j) += sc.data[i] * g(i, j);
      }
      if (nodes_[is].requires_grad) {
        Matrix& gs = grad_of(is);
        for (std::size_t i = 0; i < g.rows; ++i) {
          double acc = 0.0;
          for (std::size_t j = 0; j < g.cols; ++j) acc += x(i, j) * g(i, j);
          gs.data[i] += acc;
        }
      }
    };
  }
  return out;
}

namespace {

// Per-column index of the extreme row; the first (lowest) row wins ties.
template <typename Better>
std::vector<std::uint32_t> extreme_rows(const Matrix& a, Better better) {
  if (a.rows == 0) throw ShapeError("reduction over zero rows");
  std::vector<std::uint32_t> arg(a.cols, 0);
  for (std::size_t i = 1; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j)
      if (better(a(i, j), a(arg[j], j))) arg[j] = static_cast<std::uint32_t>(i);
  return arg;
}

}  // namespace

Var Tape::max_rows(Var a) {
  const auto ia = checked(a);
  const Matrix& av = nodes_[ia].val();
  auto arg = extreme_rows(av, [](double x, double best) { return x > best; });
  Matrix r(1, av.cols);
  for (std::size_t j = 0; j < av.cols; ++j) r.data[j] = av(arg[j], j);
  Var out = push(std::move(r), nodes_[ia].requires_grad, "max_rows");
  const auto io = out.index;
  if (nodes_[io].requires_grad) {
    nodes_[io].backward = [this, ia, io, arg = std::move(arg)] {
      Matrix& ga = grad_of(ia);
      for (std::size_t j = 0; j < arg.size(); ++j) ga(arg[j], j) += nodes_[io].grad.data[j];
    };
  }
  return out;
}

Var Tape::min_rows(Var a) {
  const auto ia = checked(a);
  const Matrix& av = nodes_[ia].val();
  auto arg = extreme_rows(av, [](double x, double best) { return x < best; });
  Matrix r(1, av.cols);
  for (std::size_t j = 0; j < av.cols; ++j) r.data[j] = av(arg[j], j);
  Var out = push(std::move(r), nodes_[ia].requires_grad, "min_rows");
  const auto io = out.index;
  if (nodes_[io].requires_grad) {
    nodes_[io].backward = [this, ia, io, arg = std::move(arg)] {
      Matrix& ga = grad_of(ia);
      for (std::size_t j = 0; j < arg.size(); ++j) ga(arg[j], j) += nodes_[io].grad.data[j];
    };
  }
  return out;
}

Var Tape::vstack(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("vstack of zero parts");
  std::vector<std::uint32_t> ids;
  std::size_t rows = 0;
  const std::size_t cols = value(parts[0]).cols;
  bool rg = false;
  for (Var p : parts) {
    const auto i = checked(p);
    if (nodes_[i].val().cols != cols) throw ShapeError("vstack: column count mismatch");
    ids.push_back(i);
    rows += nodes_[i].val().rows;
    rg = rg || nodes_[i].requires_grad;
  }
  Matrix r(rows, cols);
  std::size_t off = 0;
  for (auto i : ids) {
    std::copy(nodes_[i].val().data.begin(), nodes_[i].val().data.end(), r.data.begin() + off);
    off += nodes_[i].val().data.size();
  }
  Var out = push(std::move(r), rg, "vstack");
  const auto io = out.index;
  if (nodes_[io].requires_grad) {
    nodes_[io].backward = [this, io, ids = std::move(ids)] {
      const Matrix& g = nodes_[io].grad;
      std::size_t off = 0;
      for (auto i : ids) {
        const std::size_t n = nodes_[i].val().data.size();
        if (nodes_[i].requires_grad) {
          Matrix& gi = grad_of(i);
          for (std::size_t k = 0; k < n; ++k) gi.data[k] += g.data[off + k];
        }
        off += n;
      }
    };
  }
  return out;
}

Var Tape::sum(Var a) {
  const auto ia = checked(a);
  double s = 0.0;
  for (double x : nodes_[ia].val().data) s += x;
  Var out = push(Matrix(1, 1, s), nodes_[ia].requires_grad, "sum");
  const auto io = out.index;
  if (nodes_[io].requires_grad) {
    nodes_[io].backward = [this, ia, io] {
      Matrix& ga = grad_of(ia);
      const double g = nodes_[io].grad.data[0];
      for (double& x : ga.data) x += g;
    };
  }
  return out;
}

Var Tape::mean(Var a) {
  const auto n = value(a).size();
  if (n == 0) throw ShapeError("mean of an empty matrix");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

void Tape::backward(Var loss) {
  const auto il = checked(loss);
  if (nodes_[il].val().rows != 1 || nodes_[il].val().cols != 1) throw ShapeError("backward: loss is not 1x1");
  if (!nodes_[il].requires_grad) throw Error("backward: loss does not depend on any trainable parameter");
  grad_of(il).data[0] = 1.0;
  for (std::int64_t i = il; i >= 0; --i) {
    auto& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward();
    if (n.param) {
      Parameter& p = *n.param;
      if (!p.grad.same_shape(p.value)) p.grad = Matrix(p.value.rows, p.value.cols);
      add_into(p.grad, n.grad);
      p.grad_ready = true;
    }
  }
  clear();
}

void Tape::clear() {
  nodes_.clear();
  ++generation_;
}

}  // namespace ahp
