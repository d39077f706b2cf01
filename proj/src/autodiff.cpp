// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ogdm/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ogdm {

const Matrix& Var::value() const {
  if (tape_ == nullptr) throw TapeError("unbound variable");
  return tape_->value(*this);
}

bool Var::requires_grad() const {
  if (tape_ == nullptr) throw TapeError("unbound variable");
  return tape_->requires_grad(*this);
}

Var ParamBinding::operator[](std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return tensors[i];
  }
  throw std::out_of_range("binding has no tensor '" + std::string(name) + "'");
}

std::size_t Tape::check(Var v) const {
  if (v.tape_ != this) throw TapeError("variable belongs to a different tape");
  if (v.generation_ != generation_) throw TapeError("variable used after the tape was cleared");
  return v.index_;
}

const Matrix& Tape::value(Var v) const { return nodes_[check(v)].value; }
bool Tape::requires_grad(Var v) const { return nodes_[check(v)].requires_grad; }

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, false, false, {}});
  return Var(this, nodes_.size() - 1, generation_);
}

Var Tape::variable(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, true, false, {}});
  return Var(this, nodes_.size() - 1, generation_);
}

ParamBinding Tape::bind(const ParamStore& store, bool trainable) {
  store.validate();
  ParamBinding binding;
  binding.trainable = trainable;
  binding.total = store.size();
  std::size_t off = 0;
  for (const auto& e : store.layout) {
    const std::size_t rows = e.shape.size() == 2 ? e.shape[0] : 1;
    const std::size_t cols = e.shape.back();
    Matrix m(rows, cols);
    std::copy_n(store.values.begin() + static_cast<std::ptrdiff_t>(off), rows * cols, m.flat().begin());
    binding.tensors.push_back(trainable ? variable(std::move(m)) : constant(std::move(m)));
    binding.offsets.push_back(off);
    binding.names.push_back(e.name);
    off += rows * cols;
  }
  return binding;
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, BackwardFn fn) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(fn));
}

Var Tape::record(Matrix value, std::span<const Var> inputs, BackwardFn fn) {
  bool needs = false;
  for (Var in : inputs) needs = needs || nodes_[check(in)].requires_grad;
  nodes_.push_back(Node{std::move(value), {}, needs, false, needs ? std::move(fn) : BackwardFn{}});
  return Var(this, nodes_.size() - 1, generation_);
}

Matrix* Tape::grad_target(Var v) {
  Node& n = nodes_[check(v)];
  if (!n.requires_grad) return nullptr;
  if (!n.grad_ready) {
    n.grad = Matrix(n.value.rows(), n.value.cols());
    n.grad_ready = true;
  }
  return &n.grad;
}

void Tape::backward(Var output, const Matrix& seed) {
  const std::size_t out = check(output);
  if (!seed.same_shape(nodes_[out].value)) throw TapeError("seed shape does not match output");
  for (auto& n : nodes_) {
    n.grad = Matrix();
    n.grad_ready = false;
  }
  last_sweep_.clear();
  if (!nodes_[out].requires_grad) return;
  nodes_[out].grad = seed;
  nodes_[out].grad_ready = true;
  for (std::size_t i = out + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.grad_ready || !n.backward) continue;
    last_sweep_.push_back(i);
    n.backward(*this, n.grad);
  }
}

void Tape::backward(Var scalar_output) {
  const Matrix& v = value(scalar_output);
  if (v.rows() != 1 || v.cols() != 1) throw TapeError("scalar backward needs a 1x1 output");
  backward(scalar_output, Matrix(1, 1, 1.0));
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[check(v)];
  if (n.grad_ready) return n.grad;
  return Matrix(n.value.rows(), n.value.cols());
}

std::vector<double> Tape::param_gradient(const ParamBinding& binding) const {
  std::vector<double> out(binding.total, 0.0);
  for (std::size_t i = 0; i < binding.tensors.size(); ++i) {
    const Node& n = nodes_[check(binding.tensors[i])];
    if (!n.grad_ready) continue;
    std::copy(n.grad.flat().begin(), n.grad.flat().end(),
              out.begin() + static_cast<std::ptrdiff_t>(binding.offsets[i]));
  }
  return out;
}

void Tape::clear() {
  nodes_.clear();
  last_sweep_.clear();
  ++generation_;
}

namespace ad {
namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

template <typename F>
Matrix map(const Matrix& a, F f) {
  Matrix out(a.rows(), a.cols());
  auto src = a.flat();
  auto dst = out.flat();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}

// g_in += g_out * d(x) elementwise, with d computed from input/output values.
template <typename D>
Var unary(Var a, Matrix value, D derivative) {
  Tape& tape = *a.tape();
  return tape.record(std::move(value), {a}, [a, derivative](Tape& t, const Matrix& g) {
    Matrix* ga = t.grad_target(a);
    if (ga == nullptr) return;
    auto x = t.value(a).flat();
    auto gi = g.flat();
    auto go = ga->flat();
    for (std::size_t i = 0; i < gi.size(); ++i) go[i] += gi[i] * derivative(x[i]);
  });
}

}  // namespace

Var matmul(Var a, Var w) {
  const Matrix& A = a.value();
  const Matrix& W = w.value();
  if (A.cols() != W.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
  const std::size_t n = A.rows(), k = A.cols(), m = W.cols();
  Matrix C(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    double* c = C.row(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A(i, p);
      const double* wr = W.row(p).data();
      for (std::size_t j = 0; j < m; ++j) c[j] += aip * wr[j];
    }
  }
  return a.tape()->record(std::move(C), {a, w}, [a, w, n, k, m](Tape& t, const Matrix& g) {
    const Matrix& A = t.value(a);
    const Matrix& W = t.value(w);
    if (Matrix* ga = t.grad_target(a)) {
      for (std::size_t i = 0; i < n; ++i) {
        const double* gr = g.row(i).data();
        double* out = ga->row(i).data();
        for (std::size_t p = 0; p < k; ++p) {
          const double* wr = W.row(p).data();
          double acc = 0.0;
          for (std::size_t j = 0; j < m; ++j) acc += gr[j] * wr[j];
          out[p] += acc;
        }
      }
    }
    if (Matrix* gw = t.grad_target(w)) {
      for (std::size_t i = 0; i < n; ++i) {
        const double* gr = g.row(i).data();
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = A(i, p);
          double* out = gw->row(p).data();
          for (std::size_t j = 0; j < m; ++j) out[j] += aip * gr[j];
        }
      }
    }
  });
}

Var add_row(Var a, Var row) {
  const Matrix& A = a.value();
  const Matrix& R = row.value();
  if (R.rows() != 1 || R.cols() != A.cols()) throw std::invalid_argument("add_row: shape mismatch");
  Matrix out = A;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += R(0, j);
  }
  return a.tape()->record(std::move(out), {a, row}, [a, row](Tape& t, const Matrix& g) {
    if (Matrix* ga = t.grad_target(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) ga->flat()[i] += g.flat()[i];
    }
    if (Matrix* gr = t.grad_target(row)) {
      for (std::size_t i = 0; i < g.rows(); ++i) {
        auto src = g.row(i);
        for (std::size_t j = 0; j < src.size(); ++j) (*gr)(0, j) += src[j];
      }
    }
  });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Matrix out = a.value();
  auto bv = b.value().flat();
  for (std::size_t i = 0; i < out.size(); ++i) out.flat()[i] += bv[i];
  return a.tape()->record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (Matrix* ga = t.grad_target(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) ga->flat()[i] += g.flat()[i];
    }
    if (Matrix* gb = t.grad_target(b)) {
      for (std::size_t i = 0; i < g.size(); ++i) gb->flat()[i] += g.flat()[i];
    }
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  Matrix out = a.value();
  auto bv = b.value().flat();
  for (std::size_t i = 0; i < out.size(); ++i) out.flat()[i] -= bv[i];
  return a.tape()->record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (Matrix* ga = t.grad_target(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) ga->flat()[i] += g.flat()[i];
    }
    if (Matrix* gb = t.grad_target(b)) {
      for (std::size_t i = 0; i < g.size(); ++i) gb->flat()[i] -= g.flat()[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  Matrix out = a.value();
  auto bv = b.value().flat();
  for (std::size_t i = 0; i < out.size(); ++i) out.flat()[i] *= bv[i];
  return a.tape()->record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    auto av = t.value(a).flat();
    auto bv = t.value(b).flat();
    if (Matrix* ga = t.grad_target(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) ga->flat()[i] += g.flat()[i] * bv[i];
    }
    if (Matrix* gb = t.grad_target(b)) {
      for (std::size_t i = 0; i < g.size(); ++i) gb->flat()[i] += g.flat()[i] * av[i];
    }
  });
}

Var scale(Var a, double c) {
  return unary(a, map(a.value(), [c](double x) { return x * c; }), [c](double) { return c; });
}

Var scale_rows(Var a, std::span<const double> coeffs) {
  const Matrix& A = a.value();
  if (coeffs.size() != A.rows()) throw std::invalid_argument("scale_rows: need one coefficient per row");
  Matrix out = A;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (double& v : out.row(i)) v *= coeffs[i];
  }
  std::vector<double> c(coeffs.begin(), coeffs.end());
  return a.tape()->record(std::move(out), {a}, [a, c = std::move(c)](Tape& t, const Matrix& g) {
    Matrix* ga = t.grad_target(a);
    if (ga == nullptr) return;
    for (std::size_t i = 0; i < g.rows(); ++i) {
      auto src = g.row(i);
      auto dst = ga->row(i);
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j] * c[i];
    }
  });
}

Var add_scalar(Var a, double c) {
  return unary(a, map(a.value(), [c](double x) { return x + c; }), [](double) { return 1.0; });
}

Var tanh(Var a) {
  return unary(a, map(a.value(), [](double x) { return std::tanh(x); }), [](double x) {
    const double y = std::tanh(x);
    return 1.0 - y * y;
  });
}

namespace {
double stable_softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
}  // namespace

Var softplus(Var a) {
  return unary(a, map(a.value(), stable_softplus), stable_sigmoid);
}

Var sigmoid(Var a) {
  return unary(a, map(a.value(), stable_sigmoid), [](double x) {
    const double s = stable_sigmoid(x);
    return s * (1.0 - s);
  });
}

Var log(Var a) {
  return unary(a, map(a.value(), [](double x) { return std::log(x); }), [](double x) { return 1.0 / x; });
}

Var square(Var a) {
  return unary(a, map(a.value(), [](double x) { return x * x; }), [](double x) { return 2.0 * x; });
}

Var clamp(Var a, double lo, double hi) {
  return unary(a, map(a.value(), [lo, hi](double x) { return std::clamp(x, lo, hi); }),
               [lo, hi](double x) { return (x < lo || x > hi) ? 0.0 : 1.0; });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: nothing to concatenate");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (Var p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::size_t col = 0;
  for (Var p : parts) {
    const Matrix& v = p.value();
    for (std::size_t i = 0; i < rows; ++i) {
      std::copy(v.row(i).begin(), v.row(i).end(), out.row(i).begin() + static_cast<std::ptrdiff_t>(col));
    }
    col += v.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  Tape& tape = *parts.front().tape();
  return tape.record(std::move(out), parts, [inputs](Tape& t, const Matrix& g) {
    std::size_t col = 0;
    for (Var p : inputs) {
      const std::size_t w = t.value(p).cols();
      if (Matrix* gp = t.grad_target(p)) {
        for (std::size_t i = 0; i < g.rows(); ++i) {
          auto src = g.row(i);
          auto dst = gp->row(i);
          for (std::size_t j = 0; j < w; ++j) dst[j] += src[col + j];
        }
      }
      col += w;
    }
  });
}

Var row_sum_squares(Var a) {
  const Matrix& A = a.value();
  Matrix out(A.rows(), 1);
  for (std::size_t i = 0; i < A.rows(); ++i) {
    double acc = 0.0;
    for (double v : A.row(i)) acc += v * v;
    out(i, 0) = acc;
  }
  return a.tape()->record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    Matrix* ga = t.grad_target(a);
    if (ga == nullptr) return;
    const Matrix& A = t.value(a);
    for (std::size_t i = 0; i < A.rows(); ++i) {
      auto src = A.row(i);
      auto dst = ga->row(i);
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] += 2.0 * src[j] * g(i, 0);
    }
  });
}

Var sum(Var a) {
  double acc = 0.0;
  for (double v : a.value().flat()) acc += v;
  return a.tape()->record(Matrix(1, 1, acc), {a}, [a](Tape& t, const Matrix& g) {
    Matrix* ga = t.grad_target(a);
    if (ga == nullptr) return;
    for (double& v : ga->flat()) v += g(0, 0);
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) throw std::invalid_argument("mean: empty input");
  double acc = 0.0;
  for (double v : a.value().flat()) acc += v;
  return a.tape()->record(Matrix(1, 1, acc / n), {a}, [a, n](Tape& t, const Matrix& g) {
    Matrix* ga = t.grad_target(a);
    if (ga == nullptr) return;
    const double share = g(0, 0) / n;
    for (double& v : ga->flat()) v += share;
  });
}

}  // namespace ad
}  // namespace ogdm
