// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>
#include <string_view>

#include "ogdm/autodiff.hpp"
#include "ogdm/data.hpp"
#include "ogdm/matrix.hpp"
#include "ogdm/nets.hpp"
#include "ogdm/schedule.hpp"

namespace ogdm {

/// Velocity of the ODE dx = f(x, t) dt for every row of x at continuous t.
using OdeField = std::function<Matrix(const Matrix& x, double t)>;

/// Score estimate for every row of x at discrete time index t ≥ 1.
using ScoreModel = std::function<Matrix(const Matrix& x, int t)>;

/// Standard-normal draw for a given row (chain); lets callers keep one
/// stream per chain or inject zeros.
using RowNoise = std::function<double(std::size_t row)>;

enum class ProjectionMethod { euler, heun };
ProjectionMethod parse_projection(std::string_view name);
std::string_view to_string(ProjectionMethod m);

/// Continuous time → discrete index used for network calls: round(t·T)
/// clamped to [1, T].
int nearest_index(double t, int total_steps);

/// s_θ(x, t) = ε_θ(x, t)·score_coefficient(t).
ScoreModel network_score(const Network& theta, const NoiseSchedule& schedule);

/// Exact score −x of N(0, I); a fixed point of the variance-preserving flow.
ScoreModel standard_normal_score();

/// Variance-preserving probability-flow field v(x, t) = −½β(t)(x + s(x, t)).
OdeField pf_ode_field(ScoreModel score, const NoiseSchedule& schedule);
OdeField pf_ode_field(const Network& theta, const NoiseSchedule& schedule);

struct SolverResult {
  Matrix x;
  int nfe = 0;
};

/// Integrates from times.back() down to times.front(); `times` ascending.
SolverResult euler_integrate(const OdeField& field, Matrix x, std::span<const double> times);
/// Heun with the final interval taken as a plain Euler step.
SolverResult heun_integrate(const OdeField& field, Matrix x, std::span<const double> times);

SolverResult euler_sample(const OdeField& field, Matrix x_T, const TimeGrid& grid);
SolverResult heun_sample(const OdeField& field, Matrix x_T, const TimeGrid& grid);

/// Stochastic reverse chain on the grid: draws
/// x_{τ_{i−1}} ~ N((x + β̃ s(x, τ_i))/√(1−β̃), β̃ I) with β̃ = β̃_{τ_i}. The final
/// step returns the mean.
Matrix ancestral_sample(const ScoreModel& score, Matrix x_T, const TimeGrid& grid, const RowNoise& noise);

/// One solver step from t_from down to t_to. Heun falls back to Euler when
/// t_to is 0, mirroring the final-step guard of heun_integrate.
Matrix solver_step(const OdeField& field, const Matrix& x, double t_from, double t_to, ProjectionMethod method);

/// Projection x̂_{t−s} = one solver step of the network's probability flow
/// from t/T to (t−s)/T.
Matrix project(const Network& theta, const Matrix& x_t, int t, int s, ProjectionMethod method,
               const NoiseSchedule& schedule);

/// Differentiable projection with per-row (t, s). `eps_at_t`, when given, is
/// reused as ε_θ(x_t, t) instead of evaluating the network again.
Var record_projection(Tape& tape, const ParamBinding& theta, const MlpSpec& spec, Var x_t, std::span<const int> t,
                      std::span<const int> s, ProjectionMethod method, const NoiseSchedule& schedule,
                      const Var* eps_at_t = nullptr);

enum class SamplerKind { euler, heun, ancestral };
SamplerKind parse_sampler(std::string_view name);
std::string_view to_string(SamplerKind k);

/// Grid intervals giving at most `nfe` evaluations: N for Euler and
/// ancestral, (nfe + 1)/2 for Heun (2N − 1 evaluations).
int intervals_for_nfe(SamplerKind kind, int nfe);

/// Runs the chosen sampler on the network for n chains. Chain i draws its
/// start and its ancestral noise from Rng(seed + i).
SampleSet generate_samples(const Network& theta, const NoiseSchedule& schedule, SamplerKind kind, int nfe,
                           std::size_t n, std::uint64_t seed, GridSpacing spacing = GridSpacing::linear);

}  // namespace ogdm
