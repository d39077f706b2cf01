// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ogdm/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ogdm {

bool adam_step(ParamStore& params, std::span<const double> grads, AdamState& state, const AdamHyper& hyper) {
  const std::size_t n = params.values.size();
  if (grads.size() != n) throw std::invalid_argument("adam_step: gradient length does not match parameters");
  if (state.m.size() != n || state.v.size() != n) {
    throw std::invalid_argument("adam_step: moment buffers do not match parameters");
  }
  if (!std::all_of(grads.begin(), grads.end(), [](double g) { return std::isfinite(g); })) return false;

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t i = 0; i < n; ++i) {
    state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * grads[i];
    state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params.values[i] -= hyper.lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
  }
  return true;
}

double grad_check(const LossWithGradient& loss, const ParamStore& params, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) throw std::invalid_argument("grad_check: eps must lie in [1e-7, 1e-3]");
  std::vector<double> analytic;
  const double base = loss(params, &analytic);
  if (!std::isfinite(base)) throw std::domain_error("grad_check: loss is not finite");
  if (analytic.size() != params.size()) throw std::invalid_argument("grad_check: gradient length mismatch");

  ParamStore probe = params;
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double orig = probe.values[i];
    probe.values[i] = orig + eps;
    const double plus = loss(probe, nullptr);
    probe.values[i] = orig - eps;
    const double minus = loss(probe, nullptr);
    probe.values[i] = orig;
    if (!std::isfinite(plus) || !std::isfinite(minus)) throw std::domain_error("grad_check: loss is not finite");
    const double numeric = (plus - minus) / (2.0 * eps);
    worst = std::max(worst, std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i])));
  }
  return worst;
}

}  // namespace ogdm
