// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace ogdm {

/// ½N(μ, 1) + ½N(−μ, 1). μ = 0 is the single standard normal.
struct Mixture1D {
  double mu = 2.0;
};

double mixture_pdf(const Mixture1D& m, double u);
double mixture_log_pdf(const Mixture1D& m, double u);
/// d/du log p(u).
double mixture_score(const Mixture1D& m, double u);

/// Trapezoid rule on [lo, hi] with n equally spaced nodes.
struct QuadGrid {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n = 0;
  std::vector<double> nodes;
  std::vector<double> weights;

  /// n must be odd and at least 1001.
  static QuadGrid uniform(double lo, double hi, std::size_t n);
  /// [−(μ+8), μ+8] with n nodes.
  static QuadGrid for_mixture(const Mixture1D& m, std::size_t n = 4001);

  double integrate(std::span<const double> f) const;
};

class DensityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Densities are sampled at the grid nodes.
using Density = std::vector<double>;

Density mixture_density(const Mixture1D& m, const QuadGrid& grid);

/// p(u | v) ∝ N(v; √(1−β)u, β)·p_u(u), normalized on the grid.
Density true_reverse_pdf(const Mixture1D& m, double beta, double v, const QuadGrid& grid);

/// Small-β asymptote N(u; (v + β∇log p_u(v))/√(1−β), β).
Density gaussian_approx_pdf(const Mixture1D& m, double beta, double v, const QuadGrid& grid);

/// Normalized gaussian_approx^(1−ξ)·p_u^ξ, formed in log space.
Density geometric_mean_pdf(const Mixture1D& m, double beta, double v, double xi, const QuadGrid& grid);

double l2_distance(std::span<const double> f, std::span<const double> g, const QuadGrid& grid);

/// ∫ f log(f/g) by quadrature; nodes where f = 0 contribute nothing.
double kl_divergence(std::span<const double> f, std::span<const double> g, const QuadGrid& grid);

struct XiCurvePoint {
  double beta = 0.0;
  double v = 0.0;
  double xi = 0.0;
  double l2_at_xi = 0.0;
  double l2_at_0 = 0.0;
  double l2_at_1 = 0.0;
};

/// argmin over ξ ∈ [0, 1] of the L2 gap between the geometric mean and the
/// true reverse density: scan at 0.01 spacing, then golden-section refine
/// around the best scan point to |Δξ| ≤ 1e−4.
XiCurvePoint xi_of_beta(const Mixture1D& m, double v, double beta, const QuadGrid& grid);

struct Lemma1Row {
  double beta = 0.0;
  double l2_gaussian = 0.0;  // L2(true, small-β asymptote)
  double l2_mixture = 0.0;   // L2(true, prior p_u)
};

std::vector<Lemma1Row> lemma1_endpoint_study(const Mixture1D& m, double v, std::span<const double> betas,
                                             const QuadGrid& grid);

struct InferenceKlTerms {
  double score_term = 0.0;  // (s_θ(v) − ∇log p_u(v))²
  double kl_term = 0.0;     // KL(N(mean_θ, β) ‖ p_u)
};

/// Raw terms of the KL split of one reverse step; the caller weights them
/// by 1−ξ(β) and ξ(β).
InferenceKlTerms inference_kl_terms(const Mixture1D& m, double beta, double v,
                                    const std::function<double(double)>& model_score, const QuadGrid& grid);

}  // namespace ogdm
