// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <string_view>

#include "collapsim/dynamics.hpp"

namespace collapsim {

// Flat key-value experiment configs:
//
//   # comment
//   a = 0.5
//   b = 0
//   c = 1
//   N = 2
//   K = 2
//   horizon = 64
//   master_seed = 1234
//   mu0 = 0.5 0.5
//   theta0 = 0.5 0.5        (optional, defaults to mu0)
//   coords = 0 1            (optional, strictly increasing)
//   source_choice = per_sample
//
// Weight lists are normalized on construction.

using ConfigEntries = std::map<std::string, std::string>;

// Syntax pass: key = value lines, '#' comments, duplicate/unknown keys rejected.
ConfigEntries parse_config_entries(std::string_view text);

// Applies one "key=value" override onto parsed entries.
void apply_override(ConfigEntries& entries, std::string_view assignment);

// Builds and validates the config (throws invalid_argument_error).
ExperimentConfig config_from_entries(const ConfigEntries& entries);

ExperimentConfig parse_config_text(std::string_view text);

// Canonical serialization: fixed key order, defaults materialized, numbers at
// 17 significant digits. parse(canonical(cfg)) reproduces cfg bit for bit.
std::string canonical_config_text(const ExperimentConfig& cfg);

// FNV-1a 64 of the canonical serialization, as 16 hex digits. Changes iff a
// semantically meaningful field changes.
std::string config_digest(const ExperimentConfig& cfg);

}  // namespace collapsim
