// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "collapsim/dynamics.hpp"

namespace collapsim {

inline constexpr const char* kArtifactVersion = "0.1.0";

struct RunOptions {
    std::filesystem::path config_path;
    std::filesystem::path out_dir;
    std::vector<std::string> overrides;  // key=value, applied in order
    std::optional<std::uint64_t> seed;   // applied after overrides
    std::uint64_t runs = 1;
    unsigned parallelism = 1;
};

// Config file + overrides + seed, validated.
ExperimentConfig load_config(const RunOptions& opts);

// Subcommand bodies; return 0 on success and throw the library error types
// otherwise (main maps them onto exit codes 1/2).
int cmd_run(const RunOptions& opts);
int cmd_ensemble(const RunOptions& opts);
int cmd_oracle(const RunOptions& opts);
int cmd_report(const RunOptions& opts);

// Runs a named acceptance suite; prints one pass/fail line per criterion and
// writes a report into out_dir. Returns 0 when everything passes, 3 on any
// criterion failure.
int cmd_verify(const std::string& suite, const std::filesystem::path& out_dir);

}  // namespace collapsim
