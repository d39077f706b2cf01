// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ogdm/objective.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>

namespace ogdm {

namespace {
std::atomic<std::uint64_t> g_disc_evaluations{0};
}  // namespace

std::uint64_t discriminator_evaluations() { return g_disc_evaluations.load(); }

int lookahead_limit(int t, double k, int total_steps) {
  if (t < 1) throw std::invalid_argument("lookahead needs t >= 1");
  if (!(k >= 0.0 && k <= 1.0)) throw std::invalid_argument("lookahead range k must lie in [0, 1]");
  // The epsilon keeps products like 0.1·1000 from flooring to 99.
  const auto window = static_cast<int>(std::floor(k * total_steps + 1e-9));
  return std::max(1, std::min(t, window));
}

int sample_lookahead(int t, double k, int total_steps, Rng& rng) {
  return static_cast<int>(rng.uniform_int(1, lookahead_limit(t, k, total_steps)));
}

Var record_discriminator(Tape& tape, const ParamBinding& phi, const MlpSpec& spec, Var x, std::span<const int> t,
                         std::span<const int> s, int total_steps) {
  const std::size_t n = x.rows();
  if (t.size() != n || s.size() != n) throw std::invalid_argument("discriminator: need one (t, s) per row");
  if (spec.output_dim != 1 || !spec.lookahead_embed) {
    throw std::invalid_argument("discriminator spec needs one output and a lookahead embedding");
  }
  std::vector<double> tn(n), sn(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (s[i] < 1 || s[i] > t[i] || t[i] > total_steps) {
      throw std::invalid_argument("discriminator: need 1 <= s <= t <= T");
    }
    tn[i] = static_cast<double>(t[i]) / total_steps;
    sn[i] = static_cast<double>(s[i]) / total_steps;
  }
  g_disc_evaluations.fetch_add(1);
  const Matrix t_embed = sinusoidal_embedding(tn, spec.time_embed_dim);
  const Matrix s_embed = sinusoidal_embedding(sn, spec.time_embed_dim);
  Var logit = mlp_forward(tape, phi, spec, x, t_embed, &s_embed);
  return ad::clamp(ad::sigmoid(logit), kDiscClamp, 1.0 - kDiscClamp);
}

DiscOutput discriminator_forward(const Network& phi, std::span<const double> x, int t, int s, int total_steps) {
  Tape tape;
  const ParamBinding binding = tape.bind(phi.params, false);
  const int ts[] = {t};
  const int ss[] = {s};
  Var p = record_discriminator(tape, binding, phi.spec, tape.constant(Matrix::row_vector(x)), ts, ss, total_steps);
  return {p.value()(0, 0)};
}

double emission_loss(DiscOutput out) {
  if (!(out.p > 0.0 && out.p < 1.0)) throw std::invalid_argument("emission_loss: probability must lie in (0, 1)");
  return -std::log(out.p);
}

void ObjectiveBatch::validate(const NoiseSchedule& schedule) const {
  base.validate(schedule);
  if (s.size() != base.size() || !eps_real.same_shape(base.x0)) {
    throw std::invalid_argument("objective batch shapes are inconsistent");
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] < 1 || s[i] > base.t[i]) throw std::invalid_argument("lookahead outside [1, t]");
  }
}

ObjectiveBatch draw_objective_batch(const Matrix& data, std::size_t n, const NoiseSchedule& schedule, double k,
                                    Rng& batch_rng, Rng& aux_rng) {
  ObjectiveBatch b;
  b.base = draw_batch(data, n, schedule, batch_rng);
  b.s.resize(n);
  for (std::size_t i = 0; i < n; ++i) b.s[i] = sample_lookahead(b.base.t[i], k, schedule.steps(), aux_rng);
  b.eps_real = standard_normal_matrix(n, data.cols(), aux_rng);
  return b;
}

GeneratorGraph record_generator_objective(Tape& tape, const ParamBinding& theta, const MlpSpec& theta_spec,
                                          const ParamBinding& phi, const MlpSpec& phi_spec,
                                          const ObjectiveBatch& batch, double gamma, ProjectionMethod projection,
                                          const NoiseSchedule& schedule) {
  batch.validate(schedule);
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be non-negative");
  GeneratorGraph g;
  g.transition = record_transition_loss(tape, theta, theta_spec, batch.base, schedule);
  g.projected = record_projection(tape, theta, theta_spec, g.transition.x_t, batch.base.t, batch.s, projection,
                                  schedule, &g.transition.eps_pred);
  Var p = record_discriminator(tape, phi, phi_spec, g.projected, batch.base.t, batch.s, schedule.steps());
  g.emission = ad::scale(ad::mean(ad::log(p)), -1.0);
  g.total = ad::add(g.transition.loss, ad::scale(g.emission, gamma));
  return g;
}

DiscriminatorGraph record_discriminator_objective(Tape& tape, const ParamBinding& phi, const MlpSpec& phi_spec,
                                                  const ParamBinding& theta, const MlpSpec& theta_spec,
                                                  const ObjectiveBatch& batch, ProjectionMethod projection,
                                                  const NoiseSchedule& schedule) {
  batch.validate(schedule);
  const std::size_t n = batch.base.size();
  std::vector<int> earlier(n);
  for (std::size_t i = 0; i < n; ++i) earlier[i] = batch.base.t[i] - batch.s[i];

  Var real = tape.constant(forward_sample(batch.base.x0, earlier, batch.eps_real, schedule));
  Var x_t = tape.constant(forward_sample(batch.base.x0, batch.base.t, batch.base.eps, schedule));
  Var fake = record_projection(tape, theta, theta_spec, x_t, batch.base.t, batch.s, projection, schedule);

  DiscriminatorGraph g;
  Var p_real = record_discriminator(tape, phi, phi_spec, real, batch.base.t, batch.s, schedule.steps());
  Var p_fake = record_discriminator(tape, phi, phi_spec, fake, batch.base.t, batch.s, schedule.steps());
  g.real_term = ad::mean(ad::log(p_real));
  g.fake_term = ad::mean(ad::log(ad::add_scalar(ad::scale(p_fake, -1.0), 1.0)));
  g.objective = ad::add(g.real_term, g.fake_term);
  return g;
}

namespace {

ObjectiveValue run_generator(const Network& theta, const Network& phi, const ObjectiveBatch& batch, double gamma,
                             ProjectionMethod projection, const NoiseSchedule& schedule, bool with_grad) {
  Tape tape;
  const ParamBinding tb = tape.bind(theta.params, with_grad);
  const ParamBinding pb = tape.bind(phi.params, false);
  const GeneratorGraph g =
      record_generator_objective(tape, tb, theta.spec, pb, phi.spec, batch, gamma, projection, schedule);
  ObjectiveValue out;
  out.value = g.total.value()(0, 0);
  out.transition = g.transition.loss.value()(0, 0);
  out.emission = g.emission.value()(0, 0);
  if (!std::isfinite(out.value)) throw std::domain_error("generator objective is not finite");
  if (with_grad) {
    tape.backward(g.total);
    out.grad = tape.param_gradient(tb);
  }
  return out;
}

ObjectiveValue run_discriminator(const Network& phi, const Network& theta, const ObjectiveBatch& batch,
                                 ProjectionMethod projection, const NoiseSchedule& schedule, bool with_grad) {
  Tape tape;
  const ParamBinding pb = tape.bind(phi.params, with_grad);
  const ParamBinding tb = tape.bind(theta.params, false);
  const DiscriminatorGraph g =
      record_discriminator_objective(tape, pb, phi.spec, tb, theta.spec, batch, projection, schedule);
  ObjectiveValue out;
  out.value = g.objective.value()(0, 0);
  if (!std::isfinite(out.value)) throw std::domain_error("discriminator objective is not finite");
  if (with_grad) {
    tape.backward(g.objective);
    out.grad = tape.param_gradient(pb);
  }
  return out;
}

}  // namespace

ObjectiveValue generator_objective(const Network& theta, const Network& phi, const ObjectiveBatch& batch,
                                   double gamma, ProjectionMethod projection, const NoiseSchedule& schedule) {
  return run_generator(theta, phi, batch, gamma, projection, schedule, false);
}

ObjectiveValue generator_objective_gradient(const Network& theta, const Network& phi, const ObjectiveBatch& batch,
                                            double gamma, ProjectionMethod projection,
                                            const NoiseSchedule& schedule) {
  return run_generator(theta, phi, batch, gamma, projection, schedule, true);
}

ObjectiveValue discriminator_objective(const Network& phi, const Network& theta, const ObjectiveBatch& batch,
                                       ProjectionMethod projection, const NoiseSchedule& schedule) {
  return run_discriminator(phi, theta, batch, projection, schedule, false);
}

ObjectiveValue discriminator_objective_gradient(const Network& phi, const Network& theta,
                                                const ObjectiveBatch& batch, ProjectionMethod projection,
                                                const NoiseSchedule& schedule) {
  return run_discriminator(phi, theta, batch, projection, schedule, true);
}

double discriminator_objective_from_probs(std::span<const double> p_real, std::span<const double> p_fake) {
  if (p_real.size() != p_fake.size() || p_real.empty()) {
    throw std::invalid_argument("need equally many real and fake probabilities");
  }
  double real = 0.0, fake = 0.0;
  for (std::size_t i = 0; i < p_real.size(); ++i) {
    real += std::log(std::clamp(p_real[i], kDiscClamp, 1.0 - kDiscClamp));
    fake += std::log(1.0 - std::clamp(p_fake[i], kDiscClamp, 1.0 - kDiscClamp));
  }
  const double n = static_cast<double>(p_real.size());
  return real / n + fake / n;
}

}  // namespace ogdm
