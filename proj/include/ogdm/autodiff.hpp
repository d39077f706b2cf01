// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "ogdm/matrix.hpp"
#include "ogdm/param_store.hpp"

namespace ogdm {

class Tape;

class TapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Handle to a matrix-valued node on a Tape. Handles are invalidated by
/// Tape::clear(); using one afterwards throws TapeError.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  bool requires_grad() const;
  Tape* tape() const { return tape_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t index, std::uint64_t generation)
      : tape_(tape), index_(index), generation_(generation) {}

  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
  std::uint64_t generation_ = 0;
};

/// Leaf handles for every tensor of a ParamStore.
struct ParamBinding {
  std::vector<Var> tensors;
  std::vector<std::size_t> offsets;
  std::vector<std::string_view> names;
  std::size_t total = 0;
  bool trainable = false;

  Var operator[](std::string_view name) const;
};

/// Reverse-mode recorder. Nodes are appended in evaluation order, so index
/// order is a topological order and the reverse sweep walks it backwards.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Matrix& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Leaf that accumulates a gradient (used for input gradients).
  Var variable(Matrix value);
  /// Registers every tensor of `store` as a leaf. 2-D entries keep their
  /// shape; 1-D entries become 1×n rows. Non-trainable bindings act as
  /// constants, which is how gradient flow into a network is blocked.
  ParamBinding bind(const ParamStore& store, bool trainable);

  /// Appends a node; `fn` is kept only when some input requires a gradient.
  Var record(Matrix value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var record(Matrix value, std::span<const Var> inputs, BackwardFn fn);

  void backward(Var output, const Matrix& seed);
  /// Seeds a 1×1 output with 1.
  void backward(Var scalar_output);

  /// Gradient accumulated at `v` (zeros when nothing reached it).
  Matrix grad(Var v) const;
  std::vector<double> param_gradient(const ParamBinding& binding) const;

  /// Gradient buffer of `v` for use inside backward functions; nullptr when
  /// `v` does not require a gradient.
  Matrix* grad_target(Var v);

  const Matrix& value(Var v) const;
  bool requires_grad(Var v) const;

  void clear();
  std::size_t size() const { return nodes_.size(); }
  /// Node indices in the order the last backward() visited them.
  const std::vector<std::size_t>& last_sweep() const { return last_sweep_; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool grad_ready = false;
    BackwardFn backward;
  };

  std::size_t check(Var v) const;

  std::vector<Node> nodes_;
  std::vector<std::size_t> last_sweep_;
  std::uint64_t generation_ = 1;
};

namespace ad {

Var matmul(Var a, Var w);
/// Adds a 1×m row to every row of `a`.
Var add_row(Var a, Var row);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
/// Multiplies row i of `a` by coeffs[i].
Var scale_rows(Var a, std::span<const double> coeffs);
Var add_scalar(Var a, double c);
Var tanh(Var a);
Var softplus(Var a);
Var sigmoid(Var a);
Var log(Var a);
Var square(Var a);
/// Elementwise clamp; the gradient is zero where the clamp is active.
Var clamp(Var a, double lo, double hi);
Var concat_cols(std::span<const Var> parts);
/// n×d → n×1 of squared row norms.
Var row_sum_squares(Var a);
/// Mean of all entries as 1×1.
Var mean(Var a);
Var sum(Var a);

}  // namespace ad
}  // namespace ogdm
