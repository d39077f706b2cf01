// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ogdm/param_store.hpp"

namespace ogdm {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  static AdamState zeros(std::size_t n) { return {std::vector<double>(n), std::vector<double>(n), 0}; }
  bool operator==(const AdamState&) const = default;
};

/// Bias-corrected Adam: θ ← θ − lr·m̂/(√v̂ + eps).
/// Returns false, leaving params and state untouched, when any gradient entry
/// is non-finite.
[[nodiscard]] bool adam_step(ParamStore& params, std::span<const double> grads, AdamState& state,
                             const AdamHyper& hyper);

/// Loss evaluated at `params`; fills `grad` with the analytic gradient when
/// non-null.
using LossWithGradient = std::function<double(const ParamStore& params, std::vector<double>* grad)>;

/// Max over coordinates of |analytic − central difference| / max(1, |analytic|).
double grad_check(const LossWithGradient& loss, const ParamStore& params, double eps);

}  // namespace ogdm
