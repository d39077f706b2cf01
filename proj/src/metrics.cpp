// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ogdm/metrics.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ogdm/diffusion.hpp"
#include "ogdm/rng.hpp"

namespace ogdm {

namespace {

double mean_cross_distance(const Matrix& a, const Matrix& b) {
  const std::size_t d = a.cols();
  double total = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* x = a.row(i).data();
    double row_sum = 0.0;
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* y = b.row(j).data();
      double sq = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = x[c] - y[c];
        sq += diff * diff;
      }
      row_sum += std::sqrt(sq);
    }
    total += row_sum;
  }
  return total / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
}

Matrix subsample(const Matrix& m, std::size_t max_points, Rng& rng) {
  if (max_points == 0 || m.rows() <= max_points) return m;
  std::vector<std::size_t> idx(m.rows());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < max_points; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i),
                                                            static_cast<std::int64_t>(idx.size()) - 1));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(max_points);
  return gather_rows(m, idx);
}

double row_distance(std::span<const double> x, std::span<const double> y) {
  double sq = 0.0;
  for (std::size_t c = 0; c < x.size(); ++c) {
    const double diff = x[c] - y[c];
    sq += diff * diff;
  }
  return std::sqrt(sq);
}

}  // namespace

double energy_distance(const Matrix& a, const Matrix& b, const EnergyDistanceOptions& options) {
  if (a.rows() == 0 || b.rows() == 0) throw std::invalid_argument("energy_distance: empty sample set");
  if (a.cols() != b.cols()) throw std::invalid_argument("energy_distance: dimension mismatch");
  Rng rng(options.seed);
  const Matrix as = subsample(a, options.max_points, rng);
  const Matrix bs = subsample(b, options.max_points, rng);
  return 2.0 * mean_cross_distance(as, bs) - mean_cross_distance(as, as) - mean_cross_distance(bs, bs);
}

double energy_distance(const SampleSet& a, const SampleSet& b, const EnergyDistanceOptions& options) {
  return energy_distance(a.points, b.points, options);
}

std::vector<double> nfe_consistency_per_start(const OdeField& field, std::span<const Matrix> starts,
                                              std::span<const TimeGrid> grids, ProjectionMethod sampler) {
  if (grids.size() < 2) throw std::invalid_argument("nfe_consistency: need at least two grids");
  std::vector<double> out;
  out.reserve(starts.size());
  for (const Matrix& x_T : starts) {
    std::vector<Matrix> ends;
    for (const TimeGrid& grid : grids) {
      ends.push_back(sampler == ProjectionMethod::euler ? euler_sample(field, x_T, grid).x
                                                        : heun_sample(field, x_T, grid).x);
    }
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < ends.size(); ++i) {
      for (std::size_t j = i + 1; j < ends.size(); ++j) {
        double row_mean = 0.0;
        for (std::size_t r = 0; r < x_T.rows(); ++r) row_mean += row_distance(ends[i].row(r), ends[j].row(r));
        total += row_mean / static_cast<double>(x_T.rows());
        ++pairs;
      }
    }
    out.push_back(total / static_cast<double>(pairs));
  }
  return out;
}

double nfe_consistency(const OdeField& field, std::span<const Matrix> starts, std::span<const TimeGrid> grids,
                       ProjectionMethod sampler) {
  if (starts.empty()) throw std::invalid_argument("nfe_consistency: need at least one start");
  const auto per = nfe_consistency_per_start(field, starts, grids, sampler);
  return std::accumulate(per.begin(), per.end(), 0.0) / static_cast<double>(per.size());
}

std::vector<Matrix> noise_starts(std::span<const std::uint64_t> seeds, std::size_t chains, std::size_t dim) {
  std::vector<Matrix> out;
  for (std::uint64_t seed : seeds) {
    Rng rng(seed);
    out.push_back(standard_normal_matrix(chains, dim, rng));
  }
  return out;
}

std::vector<double> network_nfe_consistency(const Network& theta, const NoiseSchedule& schedule,
                                            ProjectionMethod sampler, std::span<const int> nfes,
                                            std::span<const std::uint64_t> seeds, std::size_t chains,
                                            GridSpacing spacing) {
  const SamplerKind kind = sampler == ProjectionMethod::euler ? SamplerKind::euler : SamplerKind::heun;
  std::vector<TimeGrid> grids;
  for (int nfe : nfes) grids.push_back(subsample_grid(schedule, intervals_for_nfe(kind, nfe), spacing));
  const auto starts = noise_starts(seeds, chains, static_cast<std::size_t>(theta.spec.input_dim));
  return nfe_consistency_per_start(pf_ode_field(theta, schedule), starts, grids, sampler);
}

double solver_order_exact() {
  const double c = std::exp(1.0) * (1.0 - (std::sin(5.0) - 5.0 * std::cos(5.0)) / 26.0);
  return c - 5.0 / 26.0;
}

std::vector<SolverOrderRow> solver_order_study(std::span<const int> ns) {
  const OdeField field = [](const Matrix& x, double t) {
    Matrix v(x.rows(), x.cols());
    for (std::size_t i = 0; i < v.flat().size(); ++i) v.flat()[i] = -x.flat()[i] + std::sin(5.0 * t);
    return v;
  };
  const double exact = solver_order_exact();
  std::vector<SolverOrderRow> rows;
  for (int n : ns) {
    if (n < 1) throw std::invalid_argument("solver_order_study: n must be >= 1");
    std::vector<double> times(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) times[static_cast<std::size_t>(i)] = static_cast<double>(i) / n;
    const Matrix start{{1.0}};
    const double e = euler_integrate(field, start, times).x(0, 0);
    const double h = heun_integrate(field, start, times).x(0, 0);
    rows.push_back({n, std::abs(e - exact), std::abs(h - exact)});
  }
  return rows;
}

double convergence_order(std::span<const double> n, std::span<const double> error) {
  if (n.size() != error.size() || n.size() < 2) throw std::invalid_argument("convergence_order: need >= 2 points");
  const double m = static_cast<double>(n.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double x = std::log(n[i]);
    const double y = std::log(error[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return -(m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace ogdm
