// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ogdm/reverse_density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace ogdm {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // ½log(2π)

double normal_log_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * d * d / var - 0.5 * std::log(var) - kLogSqrt2Pi;
}

void check_beta(double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0, 1)");
}

// exp(log_f − max) normalized by quadrature.
Density normalize_log(const std::vector<double>& log_f, const QuadGrid& grid) {
  const double top = *std::max_element(log_f.begin(), log_f.end());
  if (!std::isfinite(top)) throw DensityError("log density is -inf everywhere on the grid");
  Density f(log_f.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::exp(log_f[i] - top);
  const double z = grid.integrate(f);
  for (double& x : f) x /= z;
  return f;
}

}  // namespace

double mixture_log_pdf(const Mixture1D& m, double u) {
  const double a = normal_log_pdf(u, m.mu, 1.0);
  const double b = normal_log_pdf(u, -m.mu, 1.0);
  const double top = std::max(a, b);
  return top + std::log(0.5 * (std::exp(a - top) + std::exp(b - top)));
}

double mixture_pdf(const Mixture1D& m, double u) {
  const double k = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  const double a = std::exp(-0.5 * (u - m.mu) * (u - m.mu));
  const double b = std::exp(-0.5 * (u + m.mu) * (u + m.mu));
  return 0.5 * k * (a + b);
}

double mixture_score(const Mixture1D& m, double u) {
  // Responsibility-weighted component scores; tanh form avoids underflow.
  return -u + m.mu * std::tanh(m.mu * u);
}

QuadGrid QuadGrid::uniform(double lo, double hi, std::size_t n) {
  if (n < 1001 || n % 2 == 0) throw std::invalid_argument("quadrature grid needs an odd n >= 1001");
  if (!(hi > lo)) throw std::invalid_argument("quadrature grid needs hi > lo");
  QuadGrid g;
  g.lo = lo;
  g.hi = hi;
  g.n = n;
  g.nodes.resize(n);
  g.weights.assign(n, 0.0);
  const double h = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    g.nodes[i] = lo + h * static_cast<double>(i);
    g.weights[i] = h;
  }
  g.nodes.back() = hi;
  g.weights.front() = g.weights.back() = 0.5 * h;
  return g;
}

QuadGrid QuadGrid::for_mixture(const Mixture1D& m, std::size_t n) {
  const double half = std::abs(m.mu) + 8.0;
  return uniform(-half, half, n);
}

double QuadGrid::integrate(std::span<const double> f) const {
  if (f.size() != n) throw std::invalid_argument("density does not match the quadrature grid");
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += weights[i] * f[i];
  return acc;
}

Density mixture_density(const Mixture1D& m, const QuadGrid& grid) {
  Density f(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) f[i] = mixture_pdf(m, grid.nodes[i]);
  return f;
}

Density true_reverse_pdf(const Mixture1D& m, double beta, double v, const QuadGrid& grid) {
  check_beta(beta);
  const double shrink = std::sqrt(1.0 - beta);
  std::vector<double> log_f(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) {
    const double u = grid.nodes[i];
    log_f[i] = normal_log_pdf(v, shrink * u, beta) + mixture_log_pdf(m, u);
  }
  const double top = *std::max_element(log_f.begin(), log_f.end());
  Density f(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) f[i] = std::exp(log_f[i] - top);
  const double scaled = grid.integrate(f);
  if (!std::isfinite(top) || std::log(scaled) + top < std::log(1e-300)) {
    throw DensityError("reverse density normalizer underflows; widen the quadrature domain");
  }
  for (double& x : f) x /= scaled;
  return f;
}

Density gaussian_approx_pdf(const Mixture1D& m, double beta, double v, const QuadGrid& grid) {
  check_beta(beta);
  const double mean = (v + beta * mixture_score(m, v)) / std::sqrt(1.0 - beta);
  Density f(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) f[i] = std::exp(normal_log_pdf(grid.nodes[i], mean, beta));
  return f;
}

Density geometric_mean_pdf(const Mixture1D& m, double beta, double v, double xi, const QuadGrid& grid) {
  check_beta(beta);
  if (!(xi >= 0.0 && xi <= 1.0)) throw std::invalid_argument("xi must lie in [0, 1]");
  if (xi == 0.0) return gaussian_approx_pdf(m, beta, v, grid);
  if (xi == 1.0) return mixture_density(m, grid);
  const double mean = (v + beta * mixture_score(m, v)) / std::sqrt(1.0 - beta);
  std::vector<double> log_f(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) {
    const double u = grid.nodes[i];
    log_f[i] = (1.0 - xi) * normal_log_pdf(u, mean, beta) + xi * mixture_log_pdf(m, u);
  }
  return normalize_log(log_f, grid);
}

double l2_distance(std::span<const double> f, std::span<const double> g, const QuadGrid& grid) {
  if (f.size() != grid.n || g.size() != grid.n) throw std::invalid_argument("l2_distance: grid mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.n; ++i) {
    const double d = f[i] - g[i];
    acc += grid.weights[i] * d * d;
  }
  return std::sqrt(acc);
}

double kl_divergence(std::span<const double> f, std::span<const double> g, const QuadGrid& grid) {
  if (f.size() != grid.n || g.size() != grid.n) throw std::invalid_argument("kl_divergence: grid mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.n; ++i) {
    if (f[i] <= 0.0) continue;
    if (g[i] <= 0.0) return std::numeric_limits<double>::infinity();
    acc += grid.weights[i] * f[i] * std::log(f[i] / g[i]);
  }
  return acc;
}

XiCurvePoint xi_of_beta(const Mixture1D& m, double v, double beta, const QuadGrid& grid) {
  const Density target = true_reverse_pdf(m, beta, v, grid);
  auto gap = [&](double xi) { return l2_distance(geometric_mean_pdf(m, beta, v, xi, grid), target, grid); };

  XiCurvePoint out;
  out.beta = beta;
  out.v = v;
  out.l2_at_0 = gap(0.0);
  out.l2_at_1 = gap(1.0);

  double best_xi = 0.0;
  double best = out.l2_at_0;
  for (int i = 1; i <= 100; ++i) {
    const double xi = i / 100.0;
    const double d = i == 100 ? out.l2_at_1 : gap(xi);
    if (d < best) {
      best = d;
      best_xi = xi;
    }
  }

  double a = std::max(0.0, best_xi - 0.01);
  double b = std::min(1.0, best_xi + 0.01);
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - ratio * (b - a);
  double d = a + ratio * (b - a);
  double fc = gap(c);
  double fd = gap(d);
  while (b - a > 1e-4) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - ratio * (b - a);
      fc = gap(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + ratio * (b - a);
      fd = gap(d);
    }
  }
  const double refined = 0.5 * (a + b);
  const double refined_gap = gap(refined);
  if (refined_gap < best) {
    best = refined_gap;
    best_xi = refined;
  }
  out.xi = best_xi;
  out.l2_at_xi = best;
  return out;
}

std::vector<Lemma1Row> lemma1_endpoint_study(const Mixture1D& m, double v, std::span<const double> betas,
                                             const QuadGrid& grid) {
  const Density prior = mixture_density(m, grid);
  std::vector<Lemma1Row> rows;
  rows.reserve(betas.size());
  for (double beta : betas) {
    const Density truth = true_reverse_pdf(m, beta, v, grid);
    rows.push_back({beta, l2_distance(truth, gaussian_approx_pdf(m, beta, v, grid), grid),
                    l2_distance(truth, prior, grid)});
  }
  return rows;
}

InferenceKlTerms inference_kl_terms(const Mixture1D& m, double beta, double v,
                                    const std::function<double(double)>& model_score, const QuadGrid& grid) {
  check_beta(beta);
  const double s_model = model_score(v);
  const double diff = s_model - mixture_score(m, v);
  const double mean = (v + beta * s_model) / std::sqrt(1.0 - beta);
  Density step(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) step[i] = std::exp(normal_log_pdf(grid.nodes[i], mean, beta));
  return {diff * diff, kl_divergence(step, mixture_density(m, grid), grid)};
}

}  // namespace ogdm
