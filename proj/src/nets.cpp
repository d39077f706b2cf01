// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ogdm/nets.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ogdm {

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "softplus") return Activation::softplus;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation a) { return a == Activation::tanh ? "tanh" : "softplus"; }

void MlpSpec::validate() const {
  if (input_dim < 1 || output_dim < 1) throw std::invalid_argument("MlpSpec: dims must be >= 1");
  if (time_embed_dim < 2 || time_embed_dim % 2 != 0) {
    throw std::invalid_argument("MlpSpec: time_embed_dim must be even and >= 2");
  }
  for (int h : hidden_dims) {
    if (h < 1) throw std::invalid_argument("MlpSpec: hidden dims must be >= 1");
  }
}

Matrix sinusoidal_embedding(std::span<const double> normalized_times, int dim) {
  if (dim < 2 || dim % 2 != 0) throw std::invalid_argument("embedding width must be even and >= 2");
  const int half = dim / 2;
  Matrix out(normalized_times.size(), static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < normalized_times.size(); ++i) {
    for (int j = 0; j < half; ++j) {
      const double angle = std::numbers::pi * std::ldexp(1.0, j) * normalized_times[i];
      out(i, static_cast<std::size_t>(j)) = std::sin(angle);
      out(i, static_cast<std::size_t>(half + j)) = std::cos(angle);
    }
  }
  return out;
}

ParamStore mlp_layout(const MlpSpec& spec) {
  spec.validate();
  ParamStore store;
  std::size_t fan_in = static_cast<std::size_t>(spec.first_layer_fan_in());
  std::vector<int> widths = spec.hidden_dims;
  widths.push_back(spec.output_dim);
  for (std::size_t l = 0; l < widths.size(); ++l) {
    const auto fan_out = static_cast<std::size_t>(widths[l]);
    store.add("l" + std::to_string(l) + ".weight", {fan_in, fan_out});
    store.add("l" + std::to_string(l) + ".bias", {fan_out});
    fan_in = fan_out;
  }
  return store;
}

ParamStore init_mlp(const MlpSpec& spec, Rng& rng, bool zero_output_layer) {
  ParamStore store = mlp_layout(spec);
  const std::size_t layers = spec.hidden_dims.size() + 1;
  std::size_t off = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    const LayoutEntry& w = store.layout[2 * l];
    const double a = 1.0 / std::sqrt(static_cast<double>(w.shape[0]));
    const bool zero = zero_output_layer && l + 1 == layers;
    for (std::size_t i = 0; i < w.count(); ++i) {
      store.values[off + i] = zero ? 0.0 : (2.0 * rng.uniform() - 1.0) * a;
    }
    off += w.count() + store.layout[2 * l + 1].count();
  }
  return store;
}

Var mlp_forward(Tape& tape, const ParamBinding& params, const MlpSpec& spec, Var x,
                const Matrix& t_embed, const Matrix* s_embed) {
  spec.validate();
  const std::size_t n = x.rows();
  if (x.cols() != static_cast<std::size_t>(spec.input_dim)) {
    throw std::invalid_argument("mlp_forward: input has " + std::to_string(x.cols()) + " columns, spec expects " +
                                std::to_string(spec.input_dim));
  }
  if (t_embed.rows() != n || t_embed.cols() != static_cast<std::size_t>(spec.time_embed_dim)) {
    throw std::invalid_argument("mlp_forward: time embedding shape mismatch");
  }
  if (spec.lookahead_embed != (s_embed != nullptr)) {
    throw std::invalid_argument("mlp_forward: lookahead embedding presence does not match spec");
  }
  if (s_embed != nullptr && !s_embed->same_shape(t_embed)) {
    throw std::invalid_argument("mlp_forward: lookahead embedding shape mismatch");
  }

  std::vector<Var> parts{x, tape.constant(t_embed)};
  if (s_embed != nullptr) parts.push_back(tape.constant(*s_embed));
  Var h = ad::concat_cols(parts);

  const std::size_t layers = spec.hidden_dims.size() + 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string prefix = "l" + std::to_string(l);
    h = ad::add_row(ad::matmul(h, params[prefix + ".weight"]), params[prefix + ".bias"]);
    if (l + 1 < layers) h = spec.activation == Activation::tanh ? ad::tanh(h) : ad::softplus(h);
  }
  return h;
}

Matrix mlp_evaluate(const ParamStore& params, const MlpSpec& spec, const Matrix& x, const Matrix& t_embed,
                    const Matrix* s_embed) {
  Tape tape;
  const ParamBinding binding = tape.bind(params, false);
  return mlp_forward(tape, binding, spec, tape.constant(x), t_embed, s_embed).value();
}

}  // namespace ogdm
