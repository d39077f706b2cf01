// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ogdm/schedule.hpp"

#include <algorithm>
#include <cmath>

namespace ogdm {

NoiseSchedule NoiseSchedule::from_betas(std::vector<double> betas) {
  if (betas.empty()) throw ScheduleError("schedule needs at least one step");
  for (double b : betas) {
    if (!(b > 0.0 && b < 1.0)) throw ScheduleError("every beta must lie in (0, 1)");
  }
  NoiseSchedule s;
  s.steps_ = static_cast<int>(betas.size());
  s.beta_min_ = *std::min_element(betas.begin(), betas.end());
  s.beta_max_ = *std::max_element(betas.begin(), betas.end());
  s.beta_.assign(betas.size() + 1, 0.0);
  std::copy(betas.begin(), betas.end(), s.beta_.begin() + 1);

  s.alpha_bar_.assign(betas.size() + 1, 1.0);
  s.posterior_var_.assign(betas.size() + 1, 0.0);
  for (int t = 1; t <= s.steps_; ++t) {
    s.alpha_bar_[t] = s.alpha_bar_[t - 1] * (1.0 - s.beta_[t]);
    s.posterior_var_[t] = (1.0 - s.alpha_bar_[t - 1]) / (1.0 - s.alpha_bar_[t]) * s.beta_[t];
  }
  return s;
}

std::size_t NoiseSchedule::check(int t, int lo) const {
  if (t < lo || t > steps_) {
    throw ScheduleError("time index " + std::to_string(t) + " outside [" + std::to_string(lo) +
                        ", " + std::to_string(steps_) + "]");
  }
  return static_cast<std::size_t>(t);
}

double NoiseSchedule::score_coefficient(int t) const {
  return -1.0 / std::sqrt(1.0 - alpha_bar_.at(check(t, 1)));
}

NoiseSchedule build_linear_schedule(int steps, double beta_min, double beta_max) {
  if (steps < 1) throw ScheduleError("T must be at least 1");
  if (!(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0)) {
    throw ScheduleError("need 0 < beta_min <= beta_max < 1");
  }
  std::vector<double> betas(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
    betas[static_cast<std::size_t>(i)] = beta_min + (beta_max - beta_min) * frac;
  }
  // Pin the endpoints so interpolation roundoff cannot leave the range.
  betas.front() = beta_min;
  betas.back() = beta_max;
  return NoiseSchedule::from_betas(std::move(betas));
}

double beta_continuous(const NoiseSchedule& schedule, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw ScheduleError("continuous time must lie in [0, 1]");
  const int steps = schedule.steps();
  const double pos = t * steps;
  if (pos <= 1.0) return steps * schedule.beta(1);
  if (pos >= steps) return steps * schedule.beta(steps);
  const int lo = static_cast<int>(std::floor(pos));
  const double frac = pos - lo;
  const double a = steps * schedule.beta(lo);
  const double b = steps * schedule.beta(lo + 1);
  return a + (b - a) * frac;
}

GridSpacing parse_grid_spacing(std::string_view name) {
  if (name == "linear") return GridSpacing::linear;
  if (name == "quadratic") return GridSpacing::quadratic;
  throw ScheduleError("unknown grid spacing '" + std::string(name) + "'");
}

std::string_view to_string(GridSpacing spacing) {
  return spacing == GridSpacing::linear ? "linear" : "quadratic";
}

std::vector<double> TimeGrid::times() const {
  std::vector<double> out(tau.size());
  for (std::size_t i = 0; i < tau.size(); ++i) out[i] = static_cast<double>(tau[i]) / total_steps;
  return out;
}

TimeGrid make_grid(const NoiseSchedule& schedule, std::vector<int> tau) {
  const int steps = schedule.steps();
  if (tau.size() < 2 || tau.front() != 0 || tau.back() != steps) {
    throw ScheduleError("grid must run from 0 to T");
  }
  for (std::size_t i = 1; i < tau.size(); ++i) {
    if (tau[i] <= tau[i - 1]) throw ScheduleError("grid must be strictly increasing");
  }
  TimeGrid grid;
  grid.total_steps = steps;
  grid.tilde_beta.assign(tau.size(), 0.0);
  for (std::size_t i = 1; i < tau.size(); ++i) {
    // Unit gaps use the stored beta so the full grid reproduces it exactly.
    grid.tilde_beta[i] = tau[i] - tau[i - 1] == 1
                             ? schedule.beta(tau[i])
                             : 1.0 - schedule.alpha_bar(tau[i]) / schedule.alpha_bar(tau[i - 1]);
  }
  grid.tau = std::move(tau);
  return grid;
}

TimeGrid subsample_grid(const NoiseSchedule& schedule, int intervals, GridSpacing spacing) {
  const int steps = schedule.steps();
  if (intervals < 1) throw ScheduleError("grid needs at least one interval");
  if (intervals > steps) throw ScheduleError("grid cannot have more intervals than T");

  std::vector<int> tau;
  tau.reserve(static_cast<std::size_t>(intervals) + 1);
  if (intervals == steps) {
    // Every index is used, whatever the spacing.
    for (int i = 0; i <= steps; ++i) tau.push_back(i);
    return make_grid(schedule, std::move(tau));
  }
  for (int i = 0; i <= intervals; ++i) {
    double pos = 0.0;
    if (spacing == GridSpacing::linear) {
      pos = static_cast<double>(i) * steps / intervals;
    } else {
      const double frac = static_cast<double>(i) / intervals;
      pos = frac * frac * steps;
    }
    tau.push_back(static_cast<int>(std::lround(pos)));
  }
  tau.front() = 0;
  tau.back() = steps;

  const std::size_t before = tau.size();
  tau.erase(std::unique(tau.begin(), tau.end()), tau.end());
  TimeGrid grid = make_grid(schedule, std::move(tau));
  grid.merged_duplicates = static_cast<int>(before - grid.tau.size());
  return grid;
}

}  // namespace ogdm
