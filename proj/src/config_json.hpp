// Copyright (c) 2026, The ogdm-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "json.hpp"

#include "ogdm/training.hpp"

namespace ogdm::detail {

nlohmann::json config_to_json(const TrainConfig& cfg);
/// Unvalidated; throws ConfigError on unknown keys or wrong types.
TrainConfig config_from_json(const nlohmann::json& j);

}  // namespace ogdm::detail
