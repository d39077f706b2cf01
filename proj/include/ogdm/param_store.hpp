// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ogdm {

struct LayoutEntry {
  std::string name;
  std::vector<std::size_t> shape;

  std::size_t count() const;
  bool operator==(const LayoutEntry&) const = default;
};

/// Flat parameter vector plus the named tensor layout that slices it.
struct ParamStore {
  static constexpr std::string_view kVersion = "ogdm-params/1";

  std::vector<double> values;
  std::vector<LayoutEntry> layout;
  std::string version{kVersion};

  void add(std::string name, std::vector<std::size_t> shape, double fill = 0.0);
  std::size_t offset(std::string_view name) const;
  const LayoutEntry& entry(std::string_view name) const;

  /// Throws unless the layout covers `values` exactly.
  void validate() const;

  std::size_t size() const { return values.size(); }
  bool operator==(const ParamStore&) const = default;
};

}  // namespace ogdm
