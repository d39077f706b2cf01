// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ogdm/gradcheck.hpp"

#include <algorithm>
#include <stdexcept>

#include "ogdm/diffusion.hpp"
#include "ogdm/objective.hpp"
#include "ogdm/optimizer.hpp"

namespace ogdm {

namespace {

struct Instance {
  NoiseSchedule schedule;
  Network theta;
  Network phi;
  ObjectiveBatch batch;
  double gamma = 0.0;
  ProjectionMethod projection = ProjectionMethod::euler;
};

Instance random_instance(Rng& rng, int trial) {
  static constexpr int kSteps[] = {10, 20, 50};
  Instance in;
  const int steps = kSteps[rng.uniform_int(0, 2)];
  in.schedule = build_linear_schedule(steps, 1e-3, 0.05 + 0.25 * rng.uniform());
  const Activation act = trial % 3 == 2 ? Activation::softplus : Activation::tanh;

  in.theta.spec.hidden_dims = {6};
  in.theta.spec.activation = act;
  in.theta.spec.time_embed_dim = 4;
  in.theta.params = init_mlp(in.theta.spec, rng);

  in.phi.spec.hidden_dims = {5};
  in.phi.spec.output_dim = 1;
  in.phi.spec.activation = act;
  in.phi.spec.time_embed_dim = 4;
  in.phi.spec.lookahead_embed = true;
  in.phi.params = init_mlp(in.phi.spec, rng);

  const Matrix data = standard_normal_matrix(16, 2, rng);
  const double k = trial % 2 == 0 ? 0.1 : 0.5;
  in.batch = draw_objective_batch(data, 4, in.schedule, k, rng, rng);
  in.gamma = trial % 2 == 0 ? 0.01 : 0.5;
  in.projection = trial % 2 == 0 ? ProjectionMethod::euler : ProjectionMethod::heun;
  return in;
}

}  // namespace

GradCheckReport run_gradient_checks(std::uint64_t seed, int trials, double eps) {
  if (trials < 1) throw std::invalid_argument("run_gradient_checks: trials must be >= 1");
  Rng rng(seed);
  GradCheckReport report;
  report.trials = trials;
  for (int trial = 0; trial < trials; ++trial) {
    const Instance in = random_instance(rng, trial);

    const LossWithGradient transition = [&](const ParamStore& p, std::vector<double>* grad) {
      const Network net{in.theta.spec, p};
      if (grad) return transition_loss_gradient(net, in.batch.base, in.schedule, *grad);
      return transition_loss(net, in.batch.base, in.schedule);
    };
    report.transition = std::max(report.transition, grad_check(transition, in.theta.params, eps));

    const LossWithGradient generator = [&](const ParamStore& p, std::vector<double>* grad) {
      const Network net{in.theta.spec, p};
      if (!grad) return generator_objective(net, in.phi, in.batch, in.gamma, in.projection, in.schedule).value;
      ObjectiveValue v = generator_objective_gradient(net, in.phi, in.batch, in.gamma, in.projection, in.schedule);
      *grad = std::move(v.grad);
      return v.value;
    };
    report.generator = std::max(report.generator, grad_check(generator, in.theta.params, eps));

    const LossWithGradient discriminator = [&](const ParamStore& p, std::vector<double>* grad) {
      const Network net{in.phi.spec, p};
      if (!grad) return discriminator_objective(net, in.theta, in.batch, in.projection, in.schedule).value;
      ObjectiveValue v = discriminator_objective_gradient(net, in.theta, in.batch, in.projection, in.schedule);
      *grad = std::move(v.grad);
      return v.value;
    };
    report.discriminator = std::max(report.discriminator, grad_check(discriminator, in.phi.params, eps));
  }
  return report;
}

}  // namespace ogdm
