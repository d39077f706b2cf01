// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ogdm/autodiff.hpp"
#include "ogdm/param_store.hpp"
#include "ogdm/rng.hpp"

namespace ogdm {

enum class Activation { tanh, softplus };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);

/// Fully connected network over [x, embed(t), embed(s)?].
struct MlpSpec {
  int input_dim = 2;
  std::vector<int> hidden_dims;
  int output_dim = 2;
  Activation activation = Activation::tanh;
  int time_embed_dim = 16;
  /// Adds a second embedding block for the lookahead index s.
  bool lookahead_embed = false;

  int first_layer_fan_in() const { return input_dim + time_embed_dim * (lookahead_embed ? 2 : 1); }
  void validate() const;
  bool operator==(const MlpSpec&) const = default;
};

/// Sinusoidal features of times normalized to [0, 1]: for j < dim/2 the
/// columns are sin(π·2^j·t) followed by cos(π·2^j·t).
Matrix sinusoidal_embedding(std::span<const double> normalized_times, int dim);

/// Zero-valued store with the layout for `spec` ("l<i>.weight" as
/// fan_in×fan_out, "l<i>.bias" as fan_out).
ParamStore mlp_layout(const MlpSpec& spec);

/// Weights uniform(−a, a) with a = 1/√fan_in, biases zero. With
/// `zero_output_layer`, the last layer starts at exactly zero.
ParamStore init_mlp(const MlpSpec& spec, Rng& rng, bool zero_output_layer = false);

/// Records the network on `tape` and returns the n×output_dim result.
/// `s_embed` must be present exactly when spec.lookahead_embed is set.
Var mlp_forward(Tape& tape, const ParamBinding& params, const MlpSpec& spec, Var x,
                const Matrix& t_embed, const Matrix* s_embed = nullptr);

/// Convenience evaluation without gradients.
Matrix mlp_evaluate(const ParamStore& params, const MlpSpec& spec, const Matrix& x,
                    const Matrix& t_embed, const Matrix* s_embed = nullptr);

/// A network definition together with its weights.
struct Network {
  MlpSpec spec;
  ParamStore params;
  bool operator==(const Network&) const = default;
};

}  // namespace ogdm
