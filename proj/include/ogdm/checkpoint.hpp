// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "ogdm/nets.hpp"
#include "ogdm/optimizer.hpp"
#include "ogdm/schedule.hpp"
#include "ogdm/training.hpp"

namespace ogdm {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  static constexpr std::string_view kVersion = "ogdm-ckpt/1";

  std::string version{kVersion};
  NoiseSchedule schedule;
  Network denoiser;
  std::optional<Network> discriminator;
  AdamState opt_theta;
  std::optional<AdamState> opt_phi;
  TrainConfig config;
  std::string rng_batch;
  std::string rng_aux;
  std::string rng_disc;
  std::int64_t step = 0;
};

std::string serialize_checkpoint(const Checkpoint& c);
/// Throws CheckpointError on malformed JSON (naming the byte offset), a
/// version mismatch or an inconsistent layout.
Checkpoint parse_checkpoint(std::string_view text);

/// Writes through a temporary file and a rename.
void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ogdm
