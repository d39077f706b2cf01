// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "ogdm/autodiff.hpp"
#include "ogdm/nets.hpp"
#include "ogdm/optimizer.hpp"
#include "ogdm/param_store.hpp"

using namespace ogdm;

namespace {

ParamStore single(std::size_t rows, std::size_t cols, Rng& rng, double lo, double hi) {
  ParamStore p;
  p.add("a", {rows, cols});
  for (double& v : p.values) v = lo + (hi - lo) * rng.uniform();
  return p;
}

// Contracts an op's output with fixed random weights so every output entry
// contributes to the scalar loss.
using UnaryOp = std::function<Var(Tape&, Var)>;

LossWithGradient contracted(const UnaryOp& op, std::uint64_t weight_seed) {
  return [op, weight_seed](const ParamStore& p, std::vector<double>* grad) {
    Tape tape;
    const ParamBinding b = tape.bind(p, grad != nullptr);
    Var out = op(tape, b["a"]);
    Rng wr(weight_seed);
    Matrix w(out.rows(), out.cols());
    for (double& v : w.flat()) v = wr.normal();
    Var loss = ad::sum(ad::mul(out, tape.constant(w)));
    if (grad) {
      tape.backward(loss);
      *grad = tape.param_gradient(b);
    }
    return loss.value()(0, 0);
  };
}

}  // namespace

TEST_CASE("square gradient at three is six") {
  ParamStore p;
  p.add("theta", {1}, 3.0);
  Tape tape;
  const ParamBinding b = tape.bind(p, true);
  Var loss = ad::sum(ad::square(b["theta"]));
  tape.backward(loss);
  CHECK(tape.param_gradient(b) == std::vector<double>{6.0});
}

TEST_CASE("constant loss has zero gradient") {
  ParamStore p;
  p.add("theta", {2}, 1.5);
  Tape tape;
  const ParamBinding b = tape.bind(p, true);
  Var loss = ad::sum(tape.constant(Matrix{{4.0}}));
  tape.backward(loss);
  CHECK(tape.param_gradient(b) == std::vector<double>{0.0, 0.0});
}

TEST_CASE("clearing a tape invalidates its variables") {
  Tape tape;
  Var v = tape.variable(Matrix{{1.0}});
  tape.clear();
  CHECK_THROWS_AS(tape.value(v), TapeError);
  CHECK_THROWS_AS(tape.backward(v), TapeError);
  Tape other;
  Var w = other.variable(Matrix{{1.0}});
  CHECK_THROWS_AS(tape.grad(w), TapeError);
}

TEST_CASE("reverse sweep visits nodes in strictly decreasing order") {
  Tape tape;
  Var x = tape.variable(Matrix{{0.3, -0.2}});
  Var y = ad::tanh(ad::mul(x, x));
  Var z = ad::add(y, ad::sigmoid(x));
  Var loss = ad::sum(ad::square(z));
  tape.backward(loss);
  const auto& sweep = tape.last_sweep();
  REQUIRE(!sweep.empty());
  for (std::size_t i = 1; i < sweep.size(); ++i) CHECK(sweep[i] < sweep[i - 1]);
}

TEST_CASE("non-trainable bindings block gradients") {
  ParamStore p;
  p.add("a", {1, 2}, 0.5);
  Tape tape;
  const ParamBinding b = tape.bind(p, false);
  Var x = tape.variable(Matrix{{1.0, 2.0}});
  Var loss = ad::sum(ad::mul(b["a"], x));
  tape.backward(loss);
  CHECK(tape.param_gradient(b) == std::vector<double>{0.0, 0.0});
  CHECK(tape.grad(x) == Matrix{{0.5, 0.5}});
}

TEST_CASE("every primitive matches central differences") {
  Rng rng(2024);
  const std::vector<std::pair<const char*, UnaryOp>> ops = {
      {"tanh chain", [](Tape&, Var a) { return ad::tanh(ad::tanh(ad::scale(a, 1.3))); }},
      {"softplus", [](Tape&, Var a) { return ad::softplus(a); }},
      {"sigmoid", [](Tape&, Var a) { return ad::sigmoid(a); }},
      {"square", [](Tape&, Var a) { return ad::square(a); }},
      {"log", [](Tape&, Var a) { return ad::log(ad::add_scalar(ad::square(a), 0.5)); }},
      {"clamp", [](Tape&, Var a) { return ad::clamp(a, -0.9, 0.9); }},
      {"mul self", [](Tape&, Var a) { return ad::mul(a, ad::tanh(a)); }},
      {"sub", [](Tape&, Var a) { return ad::sub(ad::sigmoid(a), a); }},
      {"row sum squares", [](Tape&, Var a) { return ad::row_sum_squares(a); }},
      {"mean", [](Tape&, Var a) { return ad::mean(ad::square(a)); }},
      {"scale rows",
       [](Tape&, Var a) {
         std::vector<double> c(a.rows());
         for (std::size_t i = 0; i < c.size(); ++i) c[i] = 0.5 + static_cast<double>(i);
         return ad::scale_rows(a, c);
       }},
      {"matmul", [](Tape&, Var a) { return ad::matmul(a, ad::tanh(ad::matmul(ad::scale(a, -1.0), a))); }},
      {"add row",
       [](Tape& t, Var a) {
         Var ones = t.constant(Matrix(1, a.rows(), 0.25));
         return ad::add_row(ad::square(a), ad::tanh(ad::matmul(ones, a)));
       }},
      {"concat",
       [](Tape&, Var a) {
         const Var parts[] = {a, ad::tanh(a), ad::square(a)};
         return ad::concat_cols(parts);
       }},
  };
  // Square inputs keep matmul(a, a) well-formed.
  int trials = 0;
  for (const auto& [name, op] : ops) {
    for (int rep = 0; rep < 8; ++rep) {
      const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 4));
      const bool square = std::string(name) == "matmul";
      const ParamStore p =
          single(n, square ? n : static_cast<std::size_t>(rng.uniform_int(1, 4)), rng, -0.8, 0.8);
      CAPTURE(name);
      CHECK(grad_check(contracted(op, 77 + static_cast<std::uint64_t>(rep)), p, 1e-5) <= 1e-8);
      ++trials;
    }
  }
  CHECK(trials >= 100);
}

TEST_CASE("grad_check argument contract") {
  ParamStore p;
  p.add("a", {3}, 0.7);
  const LossWithGradient quad = [](const ParamStore& q, std::vector<double>* g) {
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) s += (i + 1.0) * q.values[i] * q.values[i];
    if (g) {
      g->resize(q.size());
      for (std::size_t i = 0; i < q.size(); ++i) (*g)[i] = 2.0 * (i + 1.0) * q.values[i];
    }
    return s;
  };
  CHECK(grad_check(quad, p, 1e-5) <= 1e-8);
  CHECK_THROWS(grad_check(quad, p, 1e-2));
  CHECK_THROWS(grad_check(quad, p, 1e-9));
  const LossWithGradient broken = [](const ParamStore&, std::vector<double>* g) {
    if (g) g->assign(3, 0.0);
    return std::numeric_limits<double>::quiet_NaN();
  };
  CHECK_THROWS(grad_check(broken, p, 1e-5));
}

TEST_CASE("sinusoidal embedding columns") {
  const std::vector<double> t = {0.0, 0.25, 1.0};
  const Matrix e = sinusoidal_embedding(t, 4);
  REQUIRE(e.rows() == 3);
  REQUIRE(e.cols() == 4);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(e(r, 0) == doctest::Approx(std::sin(std::numbers::pi * t[r])));
    CHECK(e(r, 1) == doctest::Approx(std::sin(2 * std::numbers::pi * t[r])));
    CHECK(e(r, 2) == doctest::Approx(std::cos(std::numbers::pi * t[r])));
    CHECK(e(r, 3) == doctest::Approx(std::cos(2 * std::numbers::pi * t[r])));
  }
  CHECK_THROWS(sinusoidal_embedding(t, 3));
}

TEST_CASE("mlp with zero parameters outputs zero") {
  MlpSpec spec;
  spec.hidden_dims = {5, 3};
  const ParamStore p = mlp_layout(spec);
  const Matrix x{{0.3, -1.2}, {4.0, 2.0}};
  const std::vector<double> t = {0.1, 0.9};
  const Matrix out = mlp_evaluate(p, spec, x, sinusoidal_embedding(t, spec.time_embed_dim));
  CHECK(out == Matrix(2, 2, 0.0));
}

TEST_CASE("single linear layer can be the identity") {
  MlpSpec spec;
  spec.time_embed_dim = 2;
  ParamStore p = mlp_layout(spec);
  const std::size_t w = p.offset("l0.weight");
  // Weight is fan_in×fan_out; the first two input rows carry x.
  p.values[w + 0 * 2 + 0] = 1.0;
  p.values[w + 1 * 2 + 1] = 1.0;
  const Matrix x{{0.3, -1.2}, {4.0, 2.0}};
  const std::vector<double> t = {0.1, 0.9};
  CHECK(mlp_evaluate(p, spec, x, sinusoidal_embedding(t, 2)) == x);
}

TEST_CASE("initialization is seeded and bounded") {
  MlpSpec spec;
  spec.hidden_dims = {7};
  Rng a(3), b(3);
  const ParamStore pa = init_mlp(spec, a);
  const ParamStore pb = init_mlp(spec, b);
  CHECK(pa == pb);
  const double bound0 = 1.0 / std::sqrt(spec.first_layer_fan_in());
  const std::size_t off = pa.offset("l0.weight");
  for (std::size_t i = 0; i < pa.entry("l0.weight").count(); ++i) CHECK(std::abs(pa.values[off + i]) <= bound0);
  for (std::size_t i = 0; i < 7; ++i) CHECK(pa.values[pa.offset("l0.bias") + i] == 0.0);
  Rng c(3);
  const ParamStore pz = init_mlp(spec, c, true);
  for (std::size_t i = 0; i < pz.entry("l1.weight").count(); ++i) CHECK(pz.values[pz.offset("l1.weight") + i] == 0.0);

  const Matrix x{{0.5, 0.5}};
  const std::vector<double> t = {0.5};
  const Matrix e = sinusoidal_embedding(t, spec.time_embed_dim);
  CHECK(mlp_evaluate(pa, spec, x, e) == mlp_evaluate(pb, spec, x, e));
}

TEST_CASE("mlp rejects mismatched inputs") {
  MlpSpec spec;
  spec.hidden_dims = {3};
  const ParamStore p = mlp_layout(spec);
  const std::vector<double> t = {0.5};
  CHECK_THROWS(mlp_evaluate(p, spec, Matrix{{1.0, 2.0, 3.0}}, sinusoidal_embedding(t, spec.time_embed_dim)));
  CHECK_THROWS(mlp_evaluate(p, spec, Matrix{{1.0, 2.0}}, sinusoidal_embedding(t, 4)));
  const Matrix e = sinusoidal_embedding(t, spec.time_embed_dim);
  CHECK_THROWS(mlp_evaluate(p, spec, Matrix{{1.0, 2.0}}, e, &e));
  MlpSpec bad = spec;
  bad.hidden_dims = {0};
  CHECK_THROWS(bad.validate());
}

TEST_CASE("param store layout must cover values") {
  ParamStore p;
  p.add("w", {2, 3});
  p.add("b", {3});
  CHECK(p.size() == 9);
  CHECK(p.offset("b") == 6);
  CHECK_NOTHROW(p.validate());
  p.values.push_back(1.0);
  CHECK_THROWS(p.validate());
  CHECK_THROWS(p.offset("missing"));
}

TEST_CASE("adam first step is lr times sign") {
  ParamStore p;
  p.add("a", {2}, 1.0);
  AdamState st = AdamState::zeros(2);
  const AdamHyper h{0.1, 0.9, 0.999, 1e-8};
  const std::vector<double> g = {0.5, -2.0};
  REQUIRE(adam_step(p, g, st, h));
  CHECK(p.values[0] == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-14));
  CHECK(p.values[1] == doctest::Approx(1.0 + 0.1 * 2.0 / (2.0 + 1e-8)).epsilon(1e-14));
  CHECK(st.step == 1);
}

TEST_CASE("adam two constant-gradient steps follow the moment recursion") {
  ParamStore p;
  p.add("a", {1}, 0.0);
  AdamState st = AdamState::zeros(1);
  const AdamHyper h{0.01, 0.9, 0.999, 1e-8};
  const double g = 0.3;
  REQUIRE(adam_step(p, std::vector<double>{g}, st, h));
  REQUIRE(adam_step(p, std::vector<double>{g}, st, h));
  // Hand recursion.
  double m = 0.0, v = 0.0, theta = 0.0;
  for (int k = 1; k <= 2; ++k) {
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1.0 - std::pow(0.9, k));
    const double vh = v / (1.0 - std::pow(0.999, k));
    theta -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
  }
  CHECK(p.values[0] == doctest::Approx(theta).epsilon(1e-13));
  CHECK(st.m[0] == doctest::Approx(m).epsilon(1e-15));
  CHECK(st.v[0] == doctest::Approx(v).epsilon(1e-15));
}

TEST_CASE("adam with zero gradients leaves parameters alone") {
  ParamStore p;
  p.add("a", {3}, 0.25);
  const ParamStore before = p;
  AdamState st = AdamState::zeros(3);
  for (int i = 0; i < 50; ++i) REQUIRE(adam_step(p, std::vector<double>(3, 0.0), st, {}));
  CHECK(p.values == before.values);
}

TEST_CASE("adam refuses non-finite gradients") {
  ParamStore p;
  p.add("a", {2}, 0.25);
  AdamState st = AdamState::zeros(2);
  const ParamStore before = p;
  const AdamState st_before = st;
  const std::vector<double> g = {1.0, std::numeric_limits<double>::infinity()};
  CHECK_FALSE(adam_step(p, g, st, {}));
  CHECK(p == before);
  CHECK(st == st_before);
}
