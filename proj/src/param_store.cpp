// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ogdm/param_store.hpp"

#include <functional>
#include <numeric>
#include <stdexcept>

namespace ogdm {

std::size_t LayoutEntry::count() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void ParamStore::add(std::string name, std::vector<std::size_t> shape, double fill) {
  for (const auto& e : layout) {
    if (e.name == name) throw std::invalid_argument("duplicate parameter '" + name + "'");
  }
  layout.push_back({std::move(name), std::move(shape)});
  values.resize(values.size() + layout.back().count(), fill);
}

std::size_t ParamStore::offset(std::string_view name) const {
  std::size_t off = 0;
  for (const auto& e : layout) {
    if (e.name == name) return off;
    off += e.count();
  }
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

const LayoutEntry& ParamStore::entry(std::string_view name) const {
  for (const auto& e : layout) {
    if (e.name == name) return e;
  }
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

void ParamStore::validate() const {
  if (version != kVersion) throw std::invalid_argument("unsupported parameter format '" + version + "'");
  std::size_t total = 0;
  for (const auto& e : layout) {
    if (e.shape.empty() || e.shape.size() > 2) {
      throw std::invalid_argument("parameter '" + e.name + "' must be 1-D or 2-D");
    }
    total += e.count();
  }
  if (total != values.size()) {
    throw std::invalid_argument("layout covers " + std::to_string(total) + " values but store holds " +
                                std::to_string(values.size()));
  }
}

}  // namespace ogdm
