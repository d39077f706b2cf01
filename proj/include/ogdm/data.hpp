// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "ogdm/matrix.hpp"

namespace ogdm {

/// Points plus where they came from.
struct SampleSet {
  Matrix points;
  std::string sampler;
  int nfe = 0;
  std::uint64_t seed = 0;

  std::size_t dim() const { return points.cols(); }
};

enum class DatasetKind { ring8, moons, spiral, mixture1d };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::ring8;
  double mu = 2.0;  // mixture1d only

  /// Accepts "ring8", "moons", "spiral", "mixture1d" or "mixture1d(<mu>)".
  static DatasetSpec parse(std::string_view name);
  std::string name() const;
  int dim() const { return kind == DatasetKind::mixture1d ? 1 : 2; }
};

/// ring8: 8 Gaussians (σ = 0.05) centred on the unit circle at angles 2πj/8.
/// moons: two interleaved half circles with σ = 0.05 noise.
/// spiral: one arm r = θ/(3π), θ = 3π√u, with σ = 0.02 noise.
/// mixture1d(μ): ½N(μ, 1) + ½N(−μ, 1).
SampleSet make_dataset(const DatasetSpec& spec, std::size_t n, std::uint64_t seed);

/// Header `x,y` for 2-D, `x` for 1-D; values printed with 17 significant digits.
std::string to_csv(const Matrix& points);
void write_csv(const std::filesystem::path& path, const Matrix& points);
Matrix read_csv(const std::filesystem::path& path);

/// Formats a double so that parsing it back yields the same bits.
std::string format_exact(double v);

/// Decorrelated seed for a named sub-stream of `seed` (splitmix64 mix).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace ogdm
