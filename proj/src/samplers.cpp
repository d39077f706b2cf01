// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ogdm/samplers.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "ogdm/diffusion.hpp"

namespace ogdm {

ProjectionMethod parse_projection(std::string_view name) {
  if (name == "euler") return ProjectionMethod::euler;
  if (name == "heun") return ProjectionMethod::heun;
  throw std::invalid_argument("unknown projection method '" + std::string(name) + "'");
}

std::string_view to_string(ProjectionMethod m) { return m == ProjectionMethod::euler ? "euler" : "heun"; }

int nearest_index(double t, int total_steps) {
  const auto idx = static_cast<int>(std::lround(t * total_steps));
  return std::clamp(idx, 1, total_steps);
}

ScoreModel network_score(const Network& theta, const NoiseSchedule& schedule) {
  return [theta, schedule](const Matrix& x, int t) {
    const std::vector<double> normalized(x.rows(), static_cast<double>(t) / schedule.steps());
    Matrix eps = mlp_evaluate(theta.params, theta.spec, x, sinusoidal_embedding(normalized, theta.spec.time_embed_dim));
    const double c = schedule.score_coefficient(t);
    for (double& v : eps.flat()) v *= c;
    return eps;
  };
}

ScoreModel standard_normal_score() {
  return [](const Matrix& x, int) {
    Matrix s = x;
    for (double& v : s.flat()) v = -v;
    return s;
  };
}

OdeField pf_ode_field(ScoreModel score, const NoiseSchedule& schedule) {
  return [score = std::move(score), schedule](const Matrix& x, double t) {
    const Matrix s = score(x, nearest_index(t, schedule.steps()));
    if (!s.same_shape(x)) throw std::invalid_argument("score model returned the wrong shape");
    const double half_beta = -0.5 * beta_continuous(schedule, t);
    Matrix v(x.rows(), x.cols());
    auto xs = x.flat();
    auto ss = s.flat();
    auto vs = v.flat();
    for (std::size_t i = 0; i < vs.size(); ++i) vs[i] = (xs[i] + ss[i]) * half_beta;
    if (!all_finite(v)) throw std::domain_error("probability-flow field produced a non-finite value");
    return v;
  };
}

OdeField pf_ode_field(const Network& theta, const NoiseSchedule& schedule) {
  return pf_ode_field(network_score(theta, schedule), schedule);
}

namespace {

void check_times(std::span<const double> times) {
  if (times.size() < 2) throw std::invalid_argument("solver needs at least two time points");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw std::invalid_argument("solver times must be strictly increasing");
  }
}

// x + dt·v, row-major, in the same operation order as the tape path.
Matrix euler_update(const Matrix& x, const Matrix& v, double dt) {
  Matrix out(x.rows(), x.cols());
  auto xs = x.flat();
  auto vs = v.flat();
  auto os = out.flat();
  for (std::size_t i = 0; i < os.size(); ++i) os[i] = xs[i] + vs[i] * dt;
  return out;
}

Matrix trapezoid_update(const Matrix& x, const Matrix& v1, const Matrix& v2, double dt) {
  Matrix out(x.rows(), x.cols());
  auto xs = x.flat();
  auto a = v1.flat();
  auto b = v2.flat();
  auto os = out.flat();
  for (std::size_t i = 0; i < os.size(); ++i) os[i] = xs[i] + (a[i] * 0.5 + b[i] * 0.5) * dt;
  return out;
}

}  // namespace

SolverResult euler_integrate(const OdeField& field, Matrix x, std::span<const double> times) {
  check_times(times);
  SolverResult r;
  for (std::size_t i = times.size() - 1; i >= 1; --i) {
    const Matrix v = field(x, times[i]);
    ++r.nfe;
    x = euler_update(x, v, times[i - 1] - times[i]);
  }
  r.x = std::move(x);
  return r;
}

SolverResult heun_integrate(const OdeField& field, Matrix x, std::span<const double> times) {
  check_times(times);
  SolverResult r;
  for (std::size_t i = times.size() - 1; i >= 1; --i) {
    const double dt = times[i - 1] - times[i];
    const Matrix v1 = field(x, times[i]);
    ++r.nfe;
    Matrix predicted = euler_update(x, v1, dt);
    if (i > 1) {
      const Matrix v2 = field(predicted, times[i - 1]);
      ++r.nfe;
      predicted = trapezoid_update(x, v1, v2, dt);
    }
    x = std::move(predicted);
  }
  r.x = std::move(x);
  return r;
}

SolverResult euler_sample(const OdeField& field, Matrix x_T, const TimeGrid& grid) {
  const auto times = grid.times();
  return euler_integrate(field, std::move(x_T), times);
}

SolverResult heun_sample(const OdeField& field, Matrix x_T, const TimeGrid& grid) {
  const auto times = grid.times();
  return heun_integrate(field, std::move(x_T), times);
}

Matrix ancestral_sample(const ScoreModel& score, Matrix x, const TimeGrid& grid, const RowNoise& noise) {
  if (grid.tau.size() < 2) throw std::invalid_argument("ancestral_sample: grid needs two points");
  for (std::size_t i = grid.tau.size() - 1; i >= 1; --i) {
    const double bt = grid.tilde_beta[i];
    const Matrix s = score(x, grid.tau[i]);
    const double inv_root = 1.0 / std::sqrt(1.0 - bt);
    const double sigma = std::sqrt(bt);
    const bool last = i == 1;
    Matrix next(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (std::size_t c = 0; c < x.cols(); ++c) {
        double v = (x(r, c) + bt * s(r, c)) * inv_root;
        if (!last) v += sigma * noise(r);
        next(r, c) = v;
      }
    }
    x = std::move(next);
  }
  return x;
}

Matrix solver_step(const OdeField& field, const Matrix& x, double t_from, double t_to, ProjectionMethod method) {
  if (!(t_to < t_from)) throw std::invalid_argument("solver_step: must step backwards in time");
  const double dt = t_to - t_from;
  const Matrix v1 = field(x, t_from);
  Matrix out = euler_update(x, v1, dt);
  if (method == ProjectionMethod::heun && t_to > 0.0) {
    const Matrix v2 = field(out, t_to);
    out = trapezoid_update(x, v1, v2, dt);
  }
  return out;
}

Matrix project(const Network& theta, const Matrix& x_t, int t, int s, ProjectionMethod method,
               const NoiseSchedule& schedule) {
  if (s < 1 || s > t || t > schedule.steps()) throw std::invalid_argument("project: need 1 <= s <= t <= T");
  const double steps = schedule.steps();
  return solver_step(pf_ode_field(theta, schedule), x_t, t / steps, (t - s) / steps, method);
}

namespace {

// v = (x + ε·c(idx))·(−½β(t)) per row.
Var record_velocity(Tape& tape, const ParamBinding& theta, const MlpSpec& spec, Var x, std::span<const double> times,
                    const NoiseSchedule& schedule, const Var* eps) {
  const int steps = schedule.steps();
  std::vector<int> idx(times.size());
  std::vector<double> coef(times.size()), half_beta(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    idx[i] = nearest_index(times[i], steps);
    coef[i] = schedule.score_coefficient(idx[i]);
    half_beta[i] = -0.5 * beta_continuous(schedule, times[i]);
  }
  Var eps_pred = eps != nullptr ? *eps : denoiser_eps(tape, theta, spec, x, idx, steps);
  Var score = ad::scale_rows(eps_pred, coef);
  return ad::scale_rows(ad::add(x, score), half_beta);
}

}  // namespace

Var record_projection(Tape& tape, const ParamBinding& theta, const MlpSpec& spec, Var x_t, std::span<const int> t,
                      std::span<const int> s, ProjectionMethod method, const NoiseSchedule& schedule,
                      const Var* eps_at_t) {
  const std::size_t n = x_t.rows();
  if (t.size() != n || s.size() != n) throw std::invalid_argument("record_projection: need one (t, s) per row");
  const double steps = schedule.steps();
  std::vector<double> from(n), to(n), dt(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (s[i] < 1 || s[i] > t[i] || t[i] > schedule.steps()) {
      throw std::invalid_argument("record_projection: need 1 <= s <= t <= T");
    }
    from[i] = t[i] / steps;
    to[i] = (t[i] - s[i]) / steps;
    dt[i] = to[i] - from[i];
  }
  if (eps_at_t != nullptr) {
    for (std::size_t i = 0; i < n; ++i) {
      if (nearest_index(from[i], schedule.steps()) != t[i]) {
        throw std::logic_error("record_projection: cached epsilon does not match the step's start time");
      }
    }
  }

  Var v1 = record_velocity(tape, theta, spec, x_t, from, schedule, eps_at_t);
  Var predicted = ad::add(x_t, ad::scale_rows(v1, dt));
  if (method == ProjectionMethod::euler) return predicted;

  std::vector<double> w1(n), w2(n);
  bool any_heun = false;
  for (std::size_t i = 0; i < n; ++i) {
    const bool heun = to[i] > 0.0;
    any_heun = any_heun || heun;
    w1[i] = heun ? 0.5 : 1.0;
    w2[i] = heun ? 0.5 : 0.0;
  }
  if (!any_heun) return predicted;
  Var v2 = record_velocity(tape, theta, spec, predicted, to, schedule, nullptr);
  Var avg = ad::add(ad::scale_rows(v1, w1), ad::scale_rows(v2, w2));
  return ad::add(x_t, ad::scale_rows(avg, dt));
}

SamplerKind parse_sampler(std::string_view name) {
  if (name == "euler") return SamplerKind::euler;
  if (name == "heun") return SamplerKind::heun;
  if (name == "ancestral") return SamplerKind::ancestral;
  throw std::invalid_argument("unknown sampler '" + std::string(name) + "'");
}

std::string_view to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::euler: return "euler";
    case SamplerKind::heun: return "heun";
    case SamplerKind::ancestral: return "ancestral";
  }
  return "?";
}

int intervals_for_nfe(SamplerKind kind, int nfe) {
  if (nfe < 1) throw std::invalid_argument("nfe must be >= 1");
  return kind == SamplerKind::heun ? (nfe + 1) / 2 : nfe;
}

SampleSet generate_samples(const Network& theta, const NoiseSchedule& schedule, SamplerKind kind, int nfe,
                           std::size_t n, std::uint64_t seed, GridSpacing spacing) {
  if (n == 0) throw std::invalid_argument("sample count must be >= 1");
  const TimeGrid grid = subsample_grid(schedule, intervals_for_nfe(kind, nfe), spacing);
  // One stream per chain (seed + chain index), so chain i does not depend on n.
  const auto dim = static_cast<std::size_t>(theta.spec.input_dim);
  std::vector<Rng> chains;
  chains.reserve(n);
  Matrix x_T(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    chains.emplace_back(seed + i);
    for (std::size_t c = 0; c < dim; ++c) x_T(i, c) = chains.back().normal();
  }
  SampleSet out;
  out.sampler = std::string(to_string(kind));
  out.seed = seed;
  switch (kind) {
    case SamplerKind::euler: {
      SolverResult r = euler_sample(pf_ode_field(theta, schedule), std::move(x_T), grid);
      out.points = std::move(r.x);
      out.nfe = r.nfe;
      break;
    }
    case SamplerKind::heun: {
      SolverResult r = heun_sample(pf_ode_field(theta, schedule), std::move(x_T), grid);
      out.points = std::move(r.x);
      out.nfe = r.nfe;
      break;
    }
    case SamplerKind::ancestral: {
      out.points = ancestral_sample(network_score(theta, schedule), std::move(x_T), grid,
                                    [&chains](std::size_t row) { return chains[row].normal(); });
      out.nfe = grid.intervals();
      break;
    }
  }
  if (!all_finite(out.points)) throw std::domain_error("sampler produced non-finite points");
  return out;
}

}  // namespace ogdm
