// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ogdm/data.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "ogdm/rng.hpp"

namespace ogdm {

DatasetSpec DatasetSpec::parse(std::string_view name) {
  if (name == "ring8") return {DatasetKind::ring8};
  if (name == "moons") return {DatasetKind::moons};
  if (name == "spiral") return {DatasetKind::spiral};
  if (name == "mixture1d") return {DatasetKind::mixture1d, 2.0};
  constexpr std::string_view prefix = "mixture1d(";
  if (name.starts_with(prefix) && name.ends_with(")")) {
    const std::string inner(name.substr(prefix.size(), name.size() - prefix.size() - 1));
    std::size_t used = 0;
    double mu = 0.0;
    try {
      mu = std::stod(inner, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != inner.size() || !(mu >= 0.0)) {
      throw std::invalid_argument("bad mixture1d parameter in '" + std::string(name) + "'");
    }
    return {DatasetKind::mixture1d, mu};
  }
  throw std::invalid_argument("unknown dataset '" + std::string(name) + "'");
}

std::string DatasetSpec::name() const {
  switch (kind) {
    case DatasetKind::ring8: return "ring8";
    case DatasetKind::moons: return "moons";
    case DatasetKind::spiral: return "spiral";
    case DatasetKind::mixture1d: return "mixture1d(" + format_exact(mu) + ")";
  }
  return "?";
}

SampleSet make_dataset(const DatasetSpec& spec, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("make_dataset: need at least one point");
  Rng rng(seed);
  SampleSet set;
  set.sampler = spec.name();
  set.seed = seed;
  set.points = Matrix(n, static_cast<std::size_t>(spec.dim()));
  constexpr double pi = std::numbers::pi;
  for (std::size_t i = 0; i < n; ++i) {
    auto row = set.points.row(i);
    switch (spec.kind) {
      case DatasetKind::ring8: {
        const auto mode = rng.uniform_int(0, 7);
        const double angle = 2.0 * pi * static_cast<double>(mode) / 8.0;
        row[0] = std::cos(angle) + 0.05 * rng.normal();
        row[1] = std::sin(angle) + 0.05 * rng.normal();
        break;
      }
      case DatasetKind::moons: {
        const bool upper = rng.uniform_int(0, 1) == 0;
        const double a = pi * rng.uniform();
        const double cx = upper ? std::cos(a) : 1.0 - std::cos(a);
        const double cy = upper ? std::sin(a) : 0.5 - std::sin(a);
        row[0] = cx - 0.5 + 0.05 * rng.normal();
        row[1] = cy - 0.25 + 0.05 * rng.normal();
        break;
      }
      case DatasetKind::spiral: {
        const double theta = 3.0 * pi * std::sqrt(rng.uniform());
        const double r = theta / (3.0 * pi);
        row[0] = r * std::cos(theta) + 0.02 * rng.normal();
        row[1] = r * std::sin(theta) + 0.02 * rng.normal();
        break;
      }
      case DatasetKind::mixture1d: {
        const double centre = rng.uniform_int(0, 1) == 0 ? spec.mu : -spec.mu;
        row[0] = centre + rng.normal();
        break;
      }
    }
  }
  return set;
}

std::string format_exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string to_csv(const Matrix& points) {
  if (points.cols() != 1 && points.cols() != 2) throw std::invalid_argument("CSV output supports 1-D or 2-D points");
  std::string out = points.cols() == 2 ? "x,y\n" : "x\n";
  for (std::size_t i = 0; i < points.rows(); ++i) {
    out += format_exact(points(i, 0));
    if (points.cols() == 2) {
      out += ',';
      out += format_exact(points(i, 1));
    }
    out += '\n';
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const Matrix& points) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  f << to_csv(points);
  if (!f) throw std::runtime_error("failed writing '" + path.string() + "'");
}

Matrix read_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("'" + path.string() + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::size_t cols = 0;
  if (line == "x,y") {
    cols = 2;
  } else if (line == "x") {
    cols = 1;
  } else {
    throw std::runtime_error("'" + path.string() + "': expected header 'x,y' or 'x'");
  }
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string cell;
    std::size_t count = 0;
    while (std::getline(fields, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != cell.size()) {
        throw std::runtime_error("'" + path.string() + "' line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
      values.push_back(v);
      ++count;
    }
    if (count != cols) {
      throw std::runtime_error("'" + path.string() + "' line " + std::to_string(lineno) + ": expected " +
                               std::to_string(cols) + " fields");
    }
    ++rows;
  }
  Matrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.flat().begin());
  return m;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace ogdm
