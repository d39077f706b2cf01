// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ogdm/diffusion.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ogdm {

void Batch::validate(const NoiseSchedule& schedule) const {
  if (x0.rows() != t.size() || !eps.same_shape(x0)) throw std::invalid_argument("batch shapes are inconsistent");
  for (int ti : t) {
    if (ti < 1 || ti > schedule.steps()) throw std::invalid_argument("batch time outside [1, T]");
  }
}

std::vector<double> forward_sample(std::span<const double> x0, int t, std::span<const double> eps,
                                   const NoiseSchedule& schedule) {
  if (x0.size() != eps.size()) throw std::invalid_argument("forward_sample: x0 and eps differ in size");
  const double abar = schedule.alpha_bar(t);
  const double signal = std::sqrt(abar);
  const double noise = std::sqrt(1.0 - abar);
  std::vector<double> out(x0.size());
  for (std::size_t j = 0; j < x0.size(); ++j) out[j] = signal * x0[j] + noise * eps[j];
  return out;
}

Matrix forward_sample(const Matrix& x0, std::span<const int> t, const Matrix& eps, const NoiseSchedule& schedule) {
  if (x0.rows() != t.size() || !x0.same_shape(eps)) throw std::invalid_argument("forward_sample: shape mismatch");
  Matrix out(x0.rows(), x0.cols());
  for (std::size_t i = 0; i < x0.rows(); ++i) {
    const auto row = forward_sample(x0.row(i), t[i], eps.row(i), schedule);
    std::copy(row.begin(), row.end(), out.row(i).begin());
  }
  return out;
}

std::vector<double> score_from_eps(std::span<const double> eps_pred, int t, const NoiseSchedule& schedule) {
  if (t < 1) throw std::invalid_argument("score_from_eps: the score is undefined at t = 0");
  const double c = schedule.score_coefficient(t);
  std::vector<double> out(eps_pred.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = eps_pred[j] * c;
  return out;
}

GaussianParams exact_posterior(std::span<const double> x_t, std::span<const double> x0, int t,
                               const NoiseSchedule& schedule) {
  if (t < 1) throw std::invalid_argument("exact_posterior: t must be >= 1");
  if (x_t.size() != x0.size()) throw std::invalid_argument("exact_posterior: dimension mismatch");
  const double beta = schedule.beta(t);
  const double abar = schedule.alpha_bar(t);
  const double signal = std::sqrt(abar);
  const double inv_root = 1.0 / std::sqrt(1.0 - beta);
  GaussianParams out;
  out.mean.resize(x_t.size());
  for (std::size_t j = 0; j < x_t.size(); ++j) {
    const double score = -(x_t[j] - signal * x0[j]) / (1.0 - abar);
    out.mean[j] = inv_root * (x_t[j] + beta * score);
  }
  out.var = schedule.posterior_var(t);
  return out;
}

double gaussian_log_density(std::span<const double> x, std::span<const double> mean, double var) {
  if (x.size() != mean.size()) throw std::invalid_argument("gaussian_log_density: dimension mismatch");
  if (!(var > 0.0)) throw std::invalid_argument("gaussian_log_density: variance must be positive");
  double sq = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double d = x[j] - mean[j];
    sq += d * d;
  }
  return -0.5 * sq / var - 0.5 * static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi * var);
}

FactorizationSides forward_chain_logdensity_identity(std::span<const double> x0,
                                                     const std::vector<std::vector<double>>& chain,
                                                     const NoiseSchedule& schedule) {
  const int steps = static_cast<int>(chain.size());
  if (steps < 1 || steps > schedule.steps()) throw std::invalid_argument("chain length must lie in [1, T]");
  for (const auto& x : chain) {
    if (x.size() != x0.size()) throw std::invalid_argument("chain dimension mismatch");
  }
  auto state = [&](int t) -> std::span<const double> {
    return t == 0 ? x0 : std::span<const double>(chain[static_cast<std::size_t>(t - 1)]);
  };

  FactorizationSides sides;
  for (int t = 1; t <= steps; ++t) {
    const double beta = schedule.beta(t);
    const double shrink = std::sqrt(1.0 - beta);
    std::vector<double> mean(x0.size());
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] = shrink * state(t - 1)[j];
    sides.lhs += gaussian_log_density(state(t), mean, beta);
  }

  const double abar = schedule.alpha_bar(steps);
  std::vector<double> marginal_mean(x0.size());
  for (std::size_t j = 0; j < x0.size(); ++j) marginal_mean[j] = std::sqrt(abar) * x0[j];
  sides.rhs = gaussian_log_density(state(steps), marginal_mean, 1.0 - abar);
  for (int t = 2; t <= steps; ++t) {
    const GaussianParams post = exact_posterior(state(t), x0, t, schedule);
    sides.rhs += gaussian_log_density(state(t - 1), post.mean, post.var);
  }
  return sides;
}

Var denoiser_eps(Tape& tape, const ParamBinding& theta, const MlpSpec& spec, Var x, std::span<const int> t,
                 int total_steps) {
  if (t.size() != x.rows()) throw std::invalid_argument("denoiser_eps: need one time per row");
  std::vector<double> normalized(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) normalized[i] = static_cast<double>(t[i]) / total_steps;
  return mlp_forward(tape, theta, spec, x, sinusoidal_embedding(normalized, spec.time_embed_dim));
}

TransitionGraph record_transition_loss(Tape& tape, const ParamBinding& theta, const MlpSpec& spec,
                                       const Batch& batch, const NoiseSchedule& schedule, const LambdaRule& lambda) {
  batch.validate(schedule);
  TransitionGraph g;
  g.x_t = tape.constant(forward_sample(batch.x0, batch.t, batch.eps, schedule));
  g.eps_pred = denoiser_eps(tape, theta, spec, g.x_t, batch.t, schedule.steps());
  Var per_row = ad::row_sum_squares(ad::sub(tape.constant(batch.eps), g.eps_pred));
  std::vector<double> weights(batch.size());
  for (std::size_t i = 0; i < weights.size(); ++i) weights[i] = lambda(batch.t[i]);
  g.loss = ad::mean(ad::scale_rows(per_row, weights));
  return g;
}

double transition_loss(const Network& theta, const Batch& batch, const NoiseSchedule& schedule,
                       const LambdaRule& lambda) {
  Tape tape;
  const ParamBinding binding = tape.bind(theta.params, false);
  const double loss = record_transition_loss(tape, binding, theta.spec, batch, schedule, lambda).loss.value()(0, 0);
  if (!std::isfinite(loss)) throw std::domain_error("transition loss is not finite");
  return loss;
}

double transition_loss_gradient(const Network& theta, const Batch& batch, const NoiseSchedule& schedule,
                                std::vector<double>& grad, const LambdaRule& lambda) {
  Tape tape;
  const ParamBinding binding = tape.bind(theta.params, true);
  Var loss = record_transition_loss(tape, binding, theta.spec, batch, schedule, lambda).loss;
  tape.backward(loss);
  grad = tape.param_gradient(binding);
  return loss.value()(0, 0);
}

Matrix standard_normal_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.flat()) v = rng.normal();
  return m;
}

Batch draw_batch(const Matrix& data, std::size_t n, const NoiseSchedule& schedule, Rng& rng) {
  if (data.rows() == 0) throw std::invalid_argument("draw_batch: empty dataset");
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(data.rows()) - 1));
  Batch b;
  b.x0 = gather_rows(data, idx);
  b.t.resize(n);
  for (auto& t : b.t) t = static_cast<int>(rng.uniform_int(1, schedule.steps()));
  b.eps = standard_normal_matrix(n, data.cols(), rng);
  return b;
}

}  // namespace ogdm
