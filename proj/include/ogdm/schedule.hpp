// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ogdm {

class ScheduleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Discrete forward-process constants for t = 0..T.
///
/// `beta[t]` and `posterior_var[t]` are indexed by time, so slot 0 is unused
/// (held at 0). `alpha_bar[0] == 1`.
class NoiseSchedule {
 public:
  static constexpr double kDefaultBetaMin = 1e-4;
  static constexpr double kDefaultBetaMax = 0.02;
  static constexpr int kDefaultSteps = 1000;

  /// Builds a schedule from explicit betas β_1..β_T.
  static NoiseSchedule from_betas(std::vector<double> betas);

  int steps() const { return steps_; }
  double beta(int t) const { return beta_.at(check(t, 1)); }
  double alpha_bar(int t) const { return alpha_bar_.at(check(t, 0)); }
  double posterior_var(int t) const { return posterior_var_.at(check(t, 1)); }

  /// −1/√(1−ᾱ_t): multiplies an ε-prediction into a score.
  double score_coefficient(int t) const;

  const std::vector<double>& betas() const { return beta_; }
  const std::vector<double>& alpha_bars() const { return alpha_bar_; }

  double beta_min() const { return beta_min_; }
  double beta_max() const { return beta_max_; }

 private:
  std::size_t check(int t, int lo) const;

  int steps_ = 0;
  double beta_min_ = 0.0;
  double beta_max_ = 0.0;
  std::vector<double> beta_;
  std::vector<double> alpha_bar_;
  std::vector<double> posterior_var_;
};

NoiseSchedule build_linear_schedule(int steps, double beta_min, double beta_max);

/// Continuous rate β(t) for t ∈ [0, 1]: piecewise-linear through the knots
/// (i/T, T·β_i), clamped to T·β_1 on [0, 1/T].
double beta_continuous(const NoiseSchedule& schedule, double t);

enum class GridSpacing { linear, quadratic };

GridSpacing parse_grid_spacing(std::string_view name);
std::string_view to_string(GridSpacing spacing);

/// Strictly increasing inference times τ_0 = 0 < … < τ_N = T.
struct TimeGrid {
  int total_steps = 0;             // T of the parent schedule
  std::vector<int> tau;            // N + 1 entries
  std::vector<double> tilde_beta;  // indexed like tau; slot 0 unused
  int merged_duplicates = 0;       // rounding collisions collapsed away

  int intervals() const { return static_cast<int>(tau.size()) - 1; }
  /// τ_i / T, the solver time of grid point i.
  double time(int i) const { return static_cast<double>(tau.at(static_cast<std::size_t>(i))) / total_steps; }
  std::vector<double> times() const;
};

TimeGrid subsample_grid(const NoiseSchedule& schedule, int intervals, GridSpacing spacing);

/// Grid over explicit time indices; must start at 0 and end at T.
TimeGrid make_grid(const NoiseSchedule& schedule, std::vector<int> tau);

}  // namespace ogdm
