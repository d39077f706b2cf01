// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "ogdm/autodiff.hpp"
#include "ogdm/matrix.hpp"
#include "ogdm/nets.hpp"
#include "ogdm/rng.hpp"
#include "ogdm/schedule.hpp"

namespace ogdm {

/// Isotropic Gaussian. var == 0 marks the point-mass posterior at t = 1.
struct GaussianParams {
  std::vector<double> mean;
  double var = 0.0;

  bool degenerate() const { return var == 0.0; }
};

/// Training rows: data points, their corruption times in [1, T] and the
/// standard-normal draws used to corrupt them.
struct Batch {
  Matrix x0;
  std::vector<int> t;
  Matrix eps;

  std::size_t size() const { return t.size(); }
  void validate(const NoiseSchedule& schedule) const;
};

/// Weight λ_t of the transition loss.
using LambdaRule = std::function<double(int t)>;
inline double unit_lambda(int) { return 1.0; }

/// x_t = √ᾱ_t·x0 + √(1−ᾱ_t)·eps. t = 0 returns x0.
std::vector<double> forward_sample(std::span<const double> x0, int t, std::span<const double> eps,
                                   const NoiseSchedule& schedule);
/// Row-wise version with per-row times.
Matrix forward_sample(const Matrix& x0, std::span<const int> t, const Matrix& eps, const NoiseSchedule& schedule);

/// s = −eps/√(1−ᾱ_t), computed as eps·score_coefficient(t).
std::vector<double> score_from_eps(std::span<const double> eps_pred, int t, const NoiseSchedule& schedule);

/// q(x_{t−1} | x_t, x0) written through the conditional score
/// ∇log q(x_t|x0) = −(x_t − √ᾱ_t x0)/(1−ᾱ_t).
GaussianParams exact_posterior(std::span<const double> x_t, std::span<const double> x0, int t,
                               const NoiseSchedule& schedule);

double gaussian_log_density(std::span<const double> x, std::span<const double> mean, double var);

/// Both sides of the forward-chain factorization
///   Σ_t log q(x_t|x_{t−1}) = log q(x_T|x0) + Σ_{t≥2} log q(x_{t−1}|x_t, x0).
/// `chain[i]` holds x_{i+1}.
struct FactorizationSides {
  double lhs = 0.0;
  double rhs = 0.0;
};
FactorizationSides forward_chain_logdensity_identity(std::span<const double> x0,
                                                     const std::vector<std::vector<double>>& chain,
                                                     const NoiseSchedule& schedule);

/// ε_θ(x, t) on a tape, embedding t/T per row.
Var denoiser_eps(Tape& tape, const ParamBinding& theta, const MlpSpec& spec, Var x, std::span<const int> t,
                 int total_steps);

struct TransitionGraph {
  Var x_t;
  Var eps_pred;
  Var loss;  // 1×1
};

/// Records mean over rows of λ_t·‖ε − ε_θ(x_t, t)‖².
TransitionGraph record_transition_loss(Tape& tape, const ParamBinding& theta, const MlpSpec& spec,
                                       const Batch& batch, const NoiseSchedule& schedule,
                                       const LambdaRule& lambda = unit_lambda);

double transition_loss(const Network& theta, const Batch& batch, const NoiseSchedule& schedule,
                       const LambdaRule& lambda = unit_lambda);
/// Loss value plus dL/dθ aligned with theta.params.
double transition_loss_gradient(const Network& theta, const Batch& batch, const NoiseSchedule& schedule,
                                std::vector<double>& grad, const LambdaRule& lambda = unit_lambda);

/// Draws rows of `data` uniformly, t ~ U{1..T} and fresh standard normals.
Batch draw_batch(const Matrix& data, std::size_t n, const NoiseSchedule& schedule, Rng& rng);

Matrix standard_normal_matrix(std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace ogdm
