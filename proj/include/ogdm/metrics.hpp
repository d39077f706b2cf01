// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ogdm/data.hpp"
#include "ogdm/matrix.hpp"
#include "ogdm/nets.hpp"
#include "ogdm/samplers.hpp"
#include "ogdm/schedule.hpp"

namespace ogdm {

struct EnergyDistanceOptions {
  /// Sets larger than this are subsampled without replacement; 0 keeps all
  /// points.
  std::size_t max_points = 0;
  std::uint64_t seed = 0;
};

/// 2·E‖A−B‖ − E‖A−A′‖ − E‖B−B′‖ over all pairs (V-statistic, so identical
/// multisets give exactly 0).
double energy_distance(const Matrix& a, const Matrix& b, const EnergyDistanceOptions& options = {});
double energy_distance(const SampleSet& a, const SampleSet& b, const EnergyDistanceOptions& options = {});

/// Integrates each x_T on every grid with the chosen solver and returns the
/// mean over pairs of grids (and over rows) of ‖x_0^(i) − x_0^(j)‖ for each
/// entry of `starts`.
std::vector<double> nfe_consistency_per_start(const OdeField& field, std::span<const Matrix> starts,
                                              std::span<const TimeGrid> grids, ProjectionMethod sampler);

/// Mean over `starts` of nfe_consistency_per_start.
double nfe_consistency(const OdeField& field, std::span<const Matrix> starts, std::span<const TimeGrid> grids,
                       ProjectionMethod sampler);

/// Standard-normal starting points, one matrix of `chains` rows per seed.
std::vector<Matrix> noise_starts(std::span<const std::uint64_t> seeds, std::size_t chains, std::size_t dim);

/// nfe_consistency of a network's probability flow, one value per seed.
/// Each seed draws `chains` starting points from Rng(seed).
std::vector<double> network_nfe_consistency(const Network& theta, const NoiseSchedule& schedule,
                                            ProjectionMethod sampler, std::span<const int> nfes,
                                            std::span<const std::uint64_t> seeds, std::size_t chains,
                                            GridSpacing spacing = GridSpacing::linear);

/// Global error at t = 0 of Euler and Heun on dx/dt = −x + sin(5t),
/// integrated backwards from x(1) = 1 over n uniform intervals.
struct SolverOrderRow {
  int n = 0;
  double euler_error = 0.0;
  double heun_error = 0.0;
};

/// Exact x(0) of the test problem.
double solver_order_exact();
std::vector<SolverOrderRow> solver_order_study(std::span<const int> ns);

/// −slope of the least-squares line through (log n, log error).
double convergence_order(std::span<const double> n, std::span<const double> error);

}  // namespace ogdm
