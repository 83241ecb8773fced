// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "collapsim/dynamics.hpp"
#include "collapsim/oracle.hpp"

// Structured output writers. Everything is emitted by hand with explicit
// %.17g precision so identical inputs give byte-identical files.
namespace collapsim {

std::string json_escape(std::string_view s);
void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string iso8601_utc_now();

struct RunManifest {
    std::string artifact_version;
    std::string subcommand;
    std::string config_digest;
    std::uint64_t master_seed = 0;
    std::string seed_policy;
    std::string kernel_backend;
    std::string started_at;
    std::string finished_at;
    std::vector<std::string> outputs;
};
std::string manifest_json(const RunManifest& m);

// One JSON object per generation row.
std::string trajectory_rows_jsonl(const TrajectoryRecord& rec);

// Single-document ensemble summary; value histograms included while they
// stay under ~100k integers.
std::string ensemble_summary_json(const EnsembleStats& stats, const ExperimentConfig& cfg);

std::string mean_trajectories_csv(const EnsembleStats& stats);
std::string collapse_times_csv(const EnsembleStats& stats);
std::string fixation_csv(const EnsembleStats& stats, const Support& support);

std::string states_csv(const OracleChain& chain);
std::string transition_matrix_csv(const OracleChain& chain);
std::string absorption_probs_csv(const OracleChain& chain, const AbsorptionProbs& probs);
std::string absorption_times_csv(const OracleChain& chain, const std::vector<double>& times);
std::string stationary_csv(const OracleChain& chain, const StationaryResult& st);

}  // namespace collapsim
