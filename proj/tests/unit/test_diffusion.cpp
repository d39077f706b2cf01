// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <algorithm>
#include <memory>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "ogdm/diffusion.hpp"
#include "ogdm/optimizer.hpp"

using namespace ogdm;

namespace {

Network small_denoiser(Rng& rng, std::vector<int> hidden = {8}) {
  Network n;
  n.spec.hidden_dims = std::move(hidden);
  n.spec.time_embed_dim = 4;
  n.params = init_mlp(n.spec, rng);
  return n;
}

}  // namespace

TEST_CASE("forward sample closed form") {
  const NoiseSchedule s = NoiseSchedule::from_betas({0.36});
  const std::vector<double> zero = {0.0}, one = {1.0};
  CHECK(forward_sample(zero, 1, zero, s) == zero);
  CHECK(forward_sample(one, 1, zero, s)[0] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(forward_sample(one, 1, one, s)[0] == doctest::Approx(1.4).epsilon(1e-15));
  CHECK(forward_sample(one, 0, one, s) == one);
  CHECK_THROWS(forward_sample(one, 2, one, s));
  CHECK_THROWS(forward_sample(one, -1, one, s));
}

TEST_CASE("score from eps") {
  const NoiseSchedule s = NoiseSchedule::from_betas({0.25});
  const std::vector<double> zero = {0.0}, one = {1.0};
  CHECK(score_from_eps(zero, 1, s)[0] == 0.0);
  CHECK(score_from_eps(one, 1, s)[0] == doctest::Approx(-2.0).epsilon(1e-15));
  CHECK_THROWS(score_from_eps(one, 0, s));
}

TEST_CASE("averaged true noise recovers the standard-normal score") {
  // x0 ~ N(0,1) gives x0 | x_t ~ N(√ᾱ x_t, 1−ᾱ) and score(x_t) = −x_t.
  const NoiseSchedule s = build_linear_schedule(100, 1e-3, 0.05);
  Rng rng(8);
  for (int t : {5, 40, 100}) {
    const double ab = s.alpha_bar(t);
    const double x_t = 0.7;
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x0 = std::sqrt(ab) * x_t + std::sqrt(1.0 - ab) * rng.normal();
      sum += (x_t - std::sqrt(ab) * x0) / std::sqrt(1.0 - ab);
    }
    const std::vector<double> eps_mean = {sum / n};
    const double score = score_from_eps(eps_mean, t, s)[0];
    // Posterior sd of ε is √ᾱ; the score estimate is that over √(1−ᾱ)√n.
    const double sigma = std::sqrt(ab) / std::sqrt(1.0 - ab) / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(score - (-x_t)) <= 4.0 * sigma);
  }
}

TEST_CASE("posterior at t = 1 is a point mass on x0") {
  const NoiseSchedule s = build_linear_schedule(10, 1e-2, 0.2);
  const std::vector<double> x0 = {0.3, -1.0};
  const std::vector<double> eps = {0.5, 0.25};
  const auto x1 = forward_sample(x0, 1, eps, s);
  const GaussianParams p = exact_posterior(x1, x0, 1, s);
  CHECK(p.degenerate());
  CHECK(p.mean[0] == doctest::Approx(x0[0]).epsilon(1e-13));
  CHECK(p.mean[1] == doctest::Approx(x0[1]).epsilon(1e-13));
}

TEST_CASE("posterior with noiseless x_t scales by 1/sqrt(1-beta)") {
  const NoiseSchedule s = build_linear_schedule(10, 1e-2, 0.2);
  const std::vector<double> x0 = {1.5};
  const std::vector<double> x_t = {std::sqrt(s.alpha_bar(6)) * 1.5};
  const GaussianParams p = exact_posterior(x_t, x0, 6, s);
  CHECK(p.mean[0] == doctest::Approx(x_t[0] / std::sqrt(1.0 - s.beta(6))).epsilon(1e-14));
  CHECK(p.var == s.posterior_var(6));
}

TEST_CASE("posterior matches the standard coefficient form") {
  const NoiseSchedule s = build_linear_schedule(50, 1e-3, 0.3);
  Rng rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    const int t = static_cast<int>(rng.uniform_int(1, 50));
    const std::vector<double> x0 = {rng.normal(), rng.normal()};
    const std::vector<double> x_t = {rng.normal(), rng.normal()};
    const GaussianParams p = exact_posterior(x_t, x0, t, s);
    const double ab = s.alpha_bar(t), ab_prev = s.alpha_bar(t - 1), b = s.beta(t);
    const double c0 = std::sqrt(ab_prev) * b / (1.0 - ab);
    const double ct = std::sqrt(1.0 - b) * (1.0 - ab_prev) / (1.0 - ab);
    for (std::size_t d = 0; d < 2; ++d) {
      CHECK(std::abs(p.mean[d] - (c0 * x0[d] + ct * x_t[d])) <= 1e-11 * (1.0 + std::abs(p.mean[d])));
    }
    CHECK(p.var == doctest::Approx((1.0 - ab_prev) / (1.0 - ab) * b).epsilon(1e-12));
  }
}

TEST_CASE("factorization identity on random chains") {
  Rng rng(4);
  for (int T : {1, 2, 5, 10}) {
    const NoiseSchedule s = build_linear_schedule(T, 0.05, 0.4);
    for (int trial = 0; trial < 250; ++trial) {
      const std::vector<double> x0 = {rng.normal(), rng.normal()};
      std::vector<std::vector<double>> chain;
      for (int t = 1; t <= T; ++t) chain.push_back({2.0 * rng.normal(), 2.0 * rng.normal()});
      const FactorizationSides f = forward_chain_logdensity_identity(x0, chain, s);
      CHECK(std::abs(f.lhs - f.rhs) <= 1e-9);
    }
  }
}

TEST_CASE("factorization at T = 1 is a single transition term") {
  const NoiseSchedule s = NoiseSchedule::from_betas({0.2});
  const std::vector<double> x0 = {0.4};
  const std::vector<std::vector<double>> chain = {{-0.3}};
  const FactorizationSides f = forward_chain_logdensity_identity(x0, chain, s);
  const std::vector<double> mean = {std::sqrt(0.8) * 0.4};
  const double direct = gaussian_log_density(chain[0], mean, 0.2);
  CHECK(f.lhs == doctest::Approx(direct).epsilon(1e-14));
  CHECK(f.rhs == doctest::Approx(direct).epsilon(1e-14));
}

TEST_CASE("factorization holds on the noiseless chain") {
  const NoiseSchedule s = build_linear_schedule(8, 0.01, 0.3);
  const std::vector<double> x0 = {1.2, -0.7};
  std::vector<std::vector<double>> chain;
  for (int t = 1; t <= 8; ++t) {
    const double a = std::sqrt(s.alpha_bar(t));
    chain.push_back({a * x0[0], a * x0[1]});
  }
  const FactorizationSides f = forward_chain_logdensity_identity(x0, chain, s);
  CHECK(std::abs(f.lhs - f.rhs) <= 1e-9);
}

TEST_CASE("composed transitions match the closed-form marginal") {
  const NoiseSchedule s = build_linear_schedule(20, 0.01, 0.2);
  Rng rng(99);
  const int n = 100000;
  const double x0 = 1.3;
  const int t = 20;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = x0;
    for (int k = 1; k <= t; ++k) x = std::sqrt(1.0 - s.beta(k)) * x + std::sqrt(s.beta(k)) * rng.normal();
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  const double want_mean = std::sqrt(s.alpha_bar(t)) * x0;
  const double want_var = 1.0 - s.alpha_bar(t);
  CHECK(std::abs(mean - want_mean) <= 3.0 * std::sqrt(want_var / n));
  // Var of the sample variance of a Gaussian is 2σ⁴/(n−1).
  CHECK(std::abs(var - want_var) <= 3.0 * std::sqrt(2.0 * want_var * want_var / (n - 1)));
}

TEST_CASE("transition loss oracles") {
  const NoiseSchedule s = build_linear_schedule(100, 1e-4, 0.02);
  Rng rng(1);
  MlpSpec spec;
  spec.hidden_dims = {4};
  spec.time_embed_dim = 4;
  const Network zero{spec, mlp_layout(spec)};
  const Matrix data = standard_normal_matrix(64, 2, rng);

  Batch b = draw_batch(data, 4000, s, rng);
  double expected = 0.0;
  for (double e : b.eps.flat()) expected += e * e;
  expected /= static_cast<double>(b.size());
  CHECK(transition_loss(zero, b, s) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(std::abs(expected - 2.0) <= 3.0 * std::sqrt(2.0 * 2.0 / 4000.0));

  // ε_θ ≡ 0 matches ε when the drawn noise is zero.
  b.eps = Matrix(b.size(), 2, 0.0);
  CHECK(transition_loss(zero, b, s) == 0.0);
}

TEST_CASE("transition loss weights and permutation invariance") {
  const NoiseSchedule s = build_linear_schedule(50, 1e-3, 0.05);
  Rng rng(2);
  const Network net = small_denoiser(rng);
  const Matrix data = standard_normal_matrix(32, 2, rng);
  const Batch b = draw_batch(data, 16, s, rng);
  const double base = transition_loss(net, b, s);
  CHECK(transition_loss(net, b, s) == base);

  std::vector<std::size_t> perm(b.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::reverse(perm.begin(), perm.end());
  Batch p;
  p.x0 = gather_rows(b.x0, perm);
  p.eps = gather_rows(b.eps, perm);
  for (std::size_t i : perm) p.t.push_back(b.t[i]);
  CHECK(transition_loss(net, p, s) == doctest::Approx(base).epsilon(1e-14));

  // λ_t = t against per-row single-element losses.
  const LambdaRule lam = [](int t) { return static_cast<double>(t); };
  double manual = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    Batch one;
    one.x0 = gather_rows(b.x0, std::vector<std::size_t>{i});
    one.eps = gather_rows(b.eps, std::vector<std::size_t>{i});
    one.t = {b.t[i]};
    manual += b.t[i] * transition_loss(net, one, s);
  }
  CHECK(transition_loss(net, b, s, lam) == doctest::Approx(manual / static_cast<double>(b.size())).epsilon(1e-13));
}

TEST_CASE("transition loss gradient matches finite differences") {
  Rng rng(3);
  double worst = 0.0;
  for (int trial = 0; trial < 25; ++trial) {
    const NoiseSchedule s = build_linear_schedule(static_cast<int>(rng.uniform_int(2, 200)), 1e-3, 0.1);
    const Network net = small_denoiser(rng, {5, 3});
    const Matrix data = standard_normal_matrix(8, 2, rng);
    const Batch b = draw_batch(data, 6, s, rng);
    const LossWithGradient f = [&](const ParamStore& p, std::vector<double>* g) {
      const Network n{net.spec, p};
      return g ? transition_loss_gradient(n, b, s, *g) : transition_loss(n, b, s);
    };
    worst = std::max(worst, grad_check(f, net.params, 1e-5));
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("batches are validated") {
  const NoiseSchedule s = build_linear_schedule(10, 1e-3, 0.1);
  Batch b;
  b.x0 = Matrix(2, 2);
  b.eps = Matrix(2, 2);
  b.t = {1, 11};
  CHECK_THROWS(b.validate(s));
  b.t = {1};
  CHECK_THROWS(b.validate(s));
  b.t = {0, 3};
  CHECK_THROWS(b.validate(s));
  b.t = {1, 10};
  CHECK_NOTHROW(b.validate(s));
  CHECK_THROWS(draw_batch(Matrix(0, 2), 3, s, *std::make_unique<Rng>(1)));
}

TEST_CASE("draw_batch is seeded") {
  const NoiseSchedule s = build_linear_schedule(10, 1e-3, 0.1);
  Rng a(7), b(7), data_rng(1);
  const Matrix data = standard_normal_matrix(20, 2, data_rng);
  const Batch ba = draw_batch(data, 12, s, a);
  const Batch bb = draw_batch(data, 12, s, b);
  CHECK(ba.x0 == bb.x0);
  CHECK(ba.t == bb.t);
  CHECK(ba.eps == bb.eps);
  for (int t : ba.t) CHECK((t >= 1 && t <= 10));
}
