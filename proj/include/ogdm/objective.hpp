// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ogdm/autodiff.hpp"
#include "ogdm/diffusion.hpp"
#include "ogdm/nets.hpp"
#include "ogdm/rng.hpp"
#include "ogdm/samplers.hpp"
#include "ogdm/schedule.hpp"

namespace ogdm {

/// Probabilities are clamped to [δ, 1−δ] so every log term stays finite.
inline constexpr double kDiscClamp = 1e-6;

struct DiscOutput {
  double p = 0.5;
};

/// s ~ U{1, …, max(1, min(t, ⌊kT⌋))}.
int sample_lookahead(int t, double k, int total_steps, Rng& rng);
/// Upper end of the lookahead support.
int lookahead_limit(int t, double k, int total_steps);

/// Number of discriminator evaluations since process start. Sampling code
/// must never move it.
std::uint64_t discriminator_evaluations();

/// Clamped D_φ(x, t, s) for every row (n×1).
Var record_discriminator(Tape& tape, const ParamBinding& phi, const MlpSpec& spec, Var x, std::span<const int> t,
                         std::span<const int> s, int total_steps);

DiscOutput discriminator_forward(const Network& phi, std::span<const double> x, int t, int s, int total_steps);

/// −log p, which equals KL(Ber(1) ‖ Ber(p)).
double emission_loss(DiscOutput out);

/// Training rows with per-row lookahead and the noise used for the real
/// branch of the discriminator.
struct ObjectiveBatch {
  Batch base;
  std::vector<int> s;
  Matrix eps_real;

  void validate(const NoiseSchedule& schedule) const;
};

/// Draws the base batch from `batch_rng` and lookaheads/real-branch noise from
/// `aux_rng`; keeping them apart lets a γ=0 run share its batch stream with a
/// plain DDPM loop.
ObjectiveBatch draw_objective_batch(const Matrix& data, std::size_t n, const NoiseSchedule& schedule, double k,
                                    Rng& batch_rng, Rng& aux_rng);

struct GeneratorGraph {
  TransitionGraph transition;
  Var projected;
  Var emission;  // mean −log D_φ(x̂, t, s), 1×1
  Var total;     // transition + γ·emission
};

/// θ-side objective. `phi` should be a non-trainable binding so no gradient
/// reaches the discriminator.
GeneratorGraph record_generator_objective(Tape& tape, const ParamBinding& theta, const MlpSpec& theta_spec,
                                          const ParamBinding& phi, const MlpSpec& phi_spec,
                                          const ObjectiveBatch& batch, double gamma, ProjectionMethod projection,
                                          const NoiseSchedule& schedule);

struct DiscriminatorGraph {
  Var real_term;  // mean log D(x_{t−s})
  Var fake_term;  // mean log(1 − D(x̂_{t−s}))
  Var objective;  // real_term + fake_term, to be maximized
};

/// φ-side objective. `theta` should be a non-trainable binding; the fake
/// branch then carries no gradient into the denoiser.
DiscriminatorGraph record_discriminator_objective(Tape& tape, const ParamBinding& phi, const MlpSpec& phi_spec,
                                                  const ParamBinding& theta, const MlpSpec& theta_spec,
                                                  const ObjectiveBatch& batch, ProjectionMethod projection,
                                                  const NoiseSchedule& schedule);

struct ObjectiveValue {
  double value = 0.0;
  double transition = 0.0;
  double emission = 0.0;
  std::vector<double> grad;  // filled only by the *_gradient variants
};

ObjectiveValue generator_objective(const Network& theta, const Network& phi, const ObjectiveBatch& batch,
                                   double gamma, ProjectionMethod projection, const NoiseSchedule& schedule);
ObjectiveValue generator_objective_gradient(const Network& theta, const Network& phi, const ObjectiveBatch& batch,
                                            double gamma, ProjectionMethod projection,
                                            const NoiseSchedule& schedule);

ObjectiveValue discriminator_objective(const Network& phi, const Network& theta, const ObjectiveBatch& batch,
                                       ProjectionMethod projection, const NoiseSchedule& schedule);
/// Gradient of the (maximized) objective with respect to φ.
ObjectiveValue discriminator_objective_gradient(const Network& phi, const Network& theta,
                                                const ObjectiveBatch& batch, ProjectionMethod projection,
                                                const NoiseSchedule& schedule);

/// mean_i [log p_real_i + log(1 − p_fake_i)] for given probabilities.
double discriminator_objective_from_probs(std::span<const double> p_real, std::span<const double> p_fake);

}  // namespace ogdm
