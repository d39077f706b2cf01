// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace ogdm {

/// Worst relative error of analytic vs central-difference gradients over a
/// set of random small instances (2-D data, tiny networks, short schedules).
struct GradCheckReport {
  int trials = 0;
  double transition = 0.0;
  double generator = 0.0;      // through the projection, both solvers
  double discriminator = 0.0;
};

GradCheckReport run_gradient_checks(std::uint64_t seed, int trials, double eps = 1e-5);

}  // namespace ogdm
