/**
 * @file autodiff.hpp
 * @brief Reverse-mode differentiation over dense matrices.
 *
 * A Tape records every primitive evaluated through it. Values are computed
 * eagerly; backward() walks the tape in reverse, accumulates gradients into the
 * Parameters reached from the loss, and clears the tape. Var handles become
 * invalid once the tape is cleared.
 *
 * Every op checks its output for NaN/Inf and throws NumericError.
 */
#pragma once

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ahp/matrix.hpp"
#include "ahp/sparse.hpp"

namespace ahp {

/// A learnable tensor. grad_ready is set once backward() has reached it.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool grad_ready = false;

  void zero_grad();
};

/// Named parameters; references returned by add() stay valid for the store's lifetime.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) = default;
  ParamStore& operator=(ParamStore&&) = default;

  Parameter& add(const std::string& name, Matrix init);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.contains(name); }
  std::size_t size() const { return params_.size(); }

  /// Values keyed by name (sorted).
  std::map<std::string, Matrix> snapshot() const;
  /// Overwrites values; names and shapes must match exactly.
  void restore(const std::map<std::string, Matrix>& values);

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::map<std::string, Parameter> params_;
};

/// Handle to a value on a Tape.
struct Var {
  std::uint32_t index = 0;
  std::uint64_t generation = 0;
};

/// Sparse matrix paired with its transpose for backward products.
struct SparseOperator {
  CsrMatrix forward;
  CsrMatrix transposed;

  explicit SparseOperator(CsrMatrix m) : forward(std::move(m)), transposed(forward.transpose()) {}
};

class Tape {
 public:
  /// With grad disabled, param() returns constants and nothing is recorded.
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) { nodes_.reserve(128); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Leaf bound to p. When trainable, backward() accumulates into p.grad.
  /// The leaf reads p.value in place, so p must not change while recorded.
  Var param(Parameter& p, bool trainable = true);

  const Matrix& value(Var v) const;
  double scalar(Var v) const;
  bool requires_grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  // Primitives.
  Var matmul(Var a, Var b);
  Var spmm(std::shared_ptr<const SparseOperator> s, Var x);
  Var add_bias(Var a, Var bias_row);  // bias is 1 x cols, added to every row
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var neg(Var a);
  Var scale(Var a, double s);
  Var relu(Var a);
  Var leaky_relu(Var a, double slope = 0.01);
  Var sigmoid(Var a);
  Var gather_rows(Var a, std::span<const std::uint32_t> rows);
  Var gather_cols(Var a, std::span<const std::uint32_t> cols);
  Var transpose(Var a);
  Var row_scale(Var a, Var s);  // s is rows x 1
  Var max_rows(Var a);          // 1 x cols; ties route to the lowest row
  Var min_rows(Var a);
  Var vstack(std::span<const Var> parts);
  Var sum(Var a);   // 1 x 1
  Var mean(Var a);  // 1 x 1

  /// Seeds d(loss)/d(loss) = 1, propagates, then clears the tape.
  void backward(Var loss);
  void clear();

 private:
  struct Node {
    Matrix value;
    const Matrix* borrowed = nullptr;  // parameter leaves read the parameter in place
    const Matrix& val() const { return borrowed ? *borrowed : value; }
    Matrix grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    std::function<void()> backward;
  };

  const Node& node(Var v) const;
  Matrix& grad_of(std::uint32_t index);
  Var push(Matrix value, bool requires_grad, const char* op);
  std::uint32_t checked(Var v) const;

  std::vector<Node> nodes_;
  std::uint64_t generation_ = 1;
  bool grad_enabled_;
};

}  // namespace ahp
