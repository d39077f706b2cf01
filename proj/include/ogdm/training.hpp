// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ogdm/matrix.hpp"
#include "ogdm/nets.hpp"
#include "ogdm/optimizer.hpp"
#include "ogdm/rng.hpp"
#include "ogdm/samplers.hpp"
#include "ogdm/schedule.hpp"

namespace ogdm {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Sub-stream ids passed to derive_seed.
enum class Stream : std::uint64_t { data = 1, batch = 2, aux = 3, disc = 4, init_theta = 5, init_phi = 6 };

struct TrainConfig {
  int T = NoiseSchedule::kDefaultSteps;
  double beta_min = NoiseSchedule::kDefaultBetaMin;
  double beta_max = NoiseSchedule::kDefaultBetaMax;
  double k = 0.1;
  double gamma = 0.0;
  double lr_theta = 1e-3;
  double lr_phi = 1e-3;
  int batch_size = 256;
  int total_steps = 2000;
  int disc_warmup_steps = 200;
  std::uint64_t seed = 0;
  std::string dataset = "ring8";
  std::string projection = "euler";
  std::optional<std::string> finetune_from;

  int train_size = 20000;
  /// Discriminator updates before each generator update; 0 trains no
  /// discriminator at all.
  int disc_steps_per_gen_step = 1;
  std::vector<int> denoiser_hidden{64, 64};
  std::vector<int> disc_hidden{64, 64};
  int time_embed_dim = 16;
  std::string activation = "tanh";
  /// Periodic checkpoint interval in iterations; 0 disables.
  int checkpoint_every = 0;

  /// Throws ConfigError.
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// Parses a JSON object whose keys mirror the TrainConfig fields. Unknown keys
/// and wrong types are ConfigErrors. The result is validated.
TrainConfig parse_train_config(std::string_view json_text);
TrainConfig load_train_config(const std::string& path);
std::string to_json_text(const TrainConfig& cfg);

NoiseSchedule schedule_for(const TrainConfig& cfg);
Matrix training_data(const TrainConfig& cfg);
MlpSpec denoiser_spec(const TrainConfig& cfg, int dim);
MlpSpec discriminator_spec(const TrainConfig& cfg, int dim);

/// One row of the loss curves. Quantities not computed in an iteration are
/// NaN.
struct CurveRow {
  std::int64_t step = 0;
  double transition_loss = 0.0;
  double emission_loss = 0.0;
  double disc_objective = 0.0;
};

std::string curves_csv(const std::vector<CurveRow>& rows);

struct Checkpoint;

enum class TrainStatus { ok, non_finite };

/// Alternating optimizer state. One iteration performs
/// disc_steps_per_gen_step discriminator ascent steps and then one generator
/// descent step; when fine-tuning, the first disc_warmup_steps iterations
/// update the discriminator only.
class Trainer {
 public:
  static Trainer fresh(const TrainConfig& cfg);
  /// θ from `base`, fresh φ and fresh optimizer moments.
  static Trainer finetune(const TrainConfig& cfg, const Checkpoint& base);
  static Trainer resume(const Checkpoint& ckpt);

  /// Runs one iteration. On a non-finite loss or gradient every piece of
  /// state is rolled back and non_finite is returned.
  TrainStatus step();

  using CheckpointSink = std::function<void(const Checkpoint&)>;
  /// Iterates until total_iterations(), stopping early on non_finite.
  TrainStatus run(const CheckpointSink& sink = {});

  /// disc_warmup_steps (when fine-tuning with a discriminator) + total_steps.
  std::int64_t total_iterations() const;
  std::int64_t iteration() const { return step_; }
  bool in_warmup() const;

  Checkpoint checkpoint() const;

  const TrainConfig& config() const { return cfg_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  const Network& denoiser() const { return theta_; }
  const std::optional<Network>& discriminator() const { return phi_; }
  const std::vector<CurveRow>& curves() const { return curves_; }

 private:
  Trainer(TrainConfig cfg, NoiseSchedule schedule);
  void init_streams();
  double discriminator_update();

  TrainConfig cfg_;
  NoiseSchedule schedule_;
  ProjectionMethod projection_ = ProjectionMethod::euler;
  Matrix data_;
  Network theta_;
  std::optional<Network> phi_;
  AdamState opt_theta_;
  AdamState opt_phi_;
  Rng batch_rng_;
  Rng aux_rng_;
  Rng disc_rng_;
  std::int64_t step_ = 0;
  std::vector<CurveRow> curves_;
};

/// Runs a whole configuration; fine-tunes from cfg.finetune_from when set.
struct TrainResult {
  TrainStatus status = TrainStatus::ok;
  std::vector<CurveRow> curves;
};
TrainResult train_alternating(const TrainConfig& cfg, Checkpoint& out,
                              const Trainer::CheckpointSink& sink = {});

}  // namespace ogdm
