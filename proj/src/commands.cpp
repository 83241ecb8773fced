// SPDX-License-Identifier: Apache-2.0

#include "collapsim/commands.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "collapsim/config_text.hpp"
#include "collapsim/diagnostics.hpp"
#include "collapsim/errors.hpp"
#include "collapsim/fmt.hpp"
#include "collapsim/kernels.hpp"
#include "collapsim/oracle.hpp"
#include "collapsim/output.hpp"
#include "collapsim/verify.hpp"

namespace collapsim {

namespace {

namespace fs = std::filesystem;

constexpr const char* kSeedPolicy =
    "xoshiro256++; per-trajectory state = 4x splitmix64 from master_seed + "
    "(trajectory_index+1)*0x9e3779b97f4a7c15; u01 = (x >> 11) * 2^-53";

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw invalid_argument_error("cannot read config file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunManifest start_manifest(const char* subcommand, const ExperimentConfig& cfg) {
    RunManifest m;
    m.artifact_version = kArtifactVersion;
    m.subcommand = subcommand;
    m.config_digest = config_digest(cfg);
    m.master_seed = cfg.master_seed;
    m.seed_policy = kSeedPolicy;
    m.kernel_backend = kern::backend_name(kern::active_backend());
    m.started_at = iso8601_utc_now();
    return m;
}

void finish_manifest(RunManifest& m, const fs::path& out_dir) {
    m.finished_at = iso8601_utc_now();
    write_text_file(out_dir / "manifest.json", manifest_json(m));
}

void emit(const fs::path& out_dir, RunManifest& m, const std::string& name,
          const std::string& content) {
    write_text_file(out_dir / name, content);
    m.outputs.push_back(name);
}

void write_ensemble_outputs(const fs::path& out_dir, RunManifest& m, const EnsembleStats& stats,
                            const ExperimentConfig& cfg) {
    emit(out_dir, m, "summary.json", ensemble_summary_json(stats, cfg));
    emit(out_dir, m, "mean_trajectories.csv", mean_trajectories_csv(stats));
    emit(out_dir, m, "collapse_times.csv", collapse_times_csv(stats));
    emit(out_dir, m, "fixation.csv", fixation_csv(stats, cfg.support));
}

}  // namespace

ExperimentConfig load_config(const RunOptions& opts) {
    auto entries = parse_config_entries(read_file(opts.config_path));
    for (const auto& ov : opts.overrides) apply_override(entries, ov);
    if (opts.seed) entries["master_seed"] = std::to_string(*opts.seed);
    return config_from_entries(entries);
}

int cmd_run(const RunOptions& opts) {
    const auto cfg = load_config(opts);
    fs::create_directories(opts.out_dir);
    auto manifest = start_manifest("run", cfg);
    // canonical config alongside the rows makes a run self-describing
    emit(opts.out_dir, manifest, "config.canonical", canonical_config_text(cfg));
    for (std::uint64_t t = 0; t < opts.runs; ++t) {
        const auto rec = run_trajectory(cfg, t);
        char name[48];
        std::snprintf(name, sizeof(name), "trajectory_%06llu.jsonl",
                      static_cast<unsigned long long>(t));
        emit(opts.out_dir, manifest, name, trajectory_rows_jsonl(rec));
    }
    finish_manifest(manifest, opts.out_dir);
    return 0;
}

int cmd_ensemble(const RunOptions& opts) {
    if (opts.runs < 1) throw invalid_argument_error("ensemble: --runs must be >= 1");
    const auto cfg = load_config(opts);
    fs::create_directories(opts.out_dir);
    auto manifest = start_manifest("ensemble", cfg);
    const auto stats = run_ensemble(cfg, opts.runs, opts.parallelism);
    write_ensemble_outputs(opts.out_dir, manifest, stats, cfg);
    finish_manifest(manifest, opts.out_dir);
    return 0;
}

int cmd_oracle(const RunOptions& opts) {
    const auto cfg = load_config(opts);
    if (cfg.parametric_weight != 0.0)
        throw unsupported_error(
            "oracle: only b = 0 chains have an exact composition-state oracle (got b = " +
            fmt_g17(cfg.parametric_weight) + ")");

    const auto chain = build_chain(cfg.batch_size, cfg.support, cfg.fresh_prob, cfg.source_law);
    fs::create_directories(opts.out_dir);
    auto manifest = start_manifest("oracle", cfg);
    emit(opts.out_dir, manifest, "states.csv", states_csv(chain));
    emit(opts.out_dir, manifest, "transition_matrix.csv", transition_matrix_csv(chain));

    std::string summary = "{\n";
    summary += "  \"config_digest\": \"" + config_digest(cfg) + "\",\n";
    summary += "  \"states\": " + std::to_string(chain.size()) + ",\n";
    summary += "  \"absorbing\": " + std::to_string(chain.absorbing().size()) + ",\n";

    if (cfg.fresh_prob == 0.0) {
        const auto probs = absorption_probs(chain);
        const auto times = absorption_times(chain);
        emit(opts.out_dir, manifest, "absorption_probs.csv", absorption_probs_csv(chain, probs));
        emit(opts.out_dir, manifest, "absorption_times.csv", absorption_times_csv(chain, times));
        double max_time = 0.0;
        for (double t : times) max_time = std::max(max_time, t);
        summary += "  \"regime\": \"absorbing\",\n";
        summary += "  \"max_expected_absorption_time\": " + fmt_g17(max_time) + "\n";
    } else {
        const auto st = stationary_distribution(chain);
        emit(opts.out_dir, manifest, "stationary.csv", stationary_csv(chain, st));
        if (!st.unique)
            std::cerr << "oracle: warning: reducible chain, " << st.distributions.size()
                      << " extreme stationary distributions reported\n";
        summary += "  \"regime\": \"ergodic\",\n";
        summary += "  \"stationary_unique\": " + std::string(st.unique ? "true" : "false") + ",\n";
        summary += "  \"stationary_barycenters\": [";
        for (std::size_t i = 0; i < st.barycenters.size(); ++i) {
            if (i > 0) summary += ", ";
            summary += "[";
            for (std::size_t j = 0; j < st.barycenters[i].size(); ++j) {
                if (j > 0) summary += ", ";
                summary += fmt_g17(st.barycenters[i][j]);
            }
            summary += "]";
        }
        summary += "],\n";
        summary += "  \"barycenter_tv_from_mu0\": " +
                   fmt_g17(tv_distance(st.barycenters[0], cfg.source_law)) + "\n";
    }
    summary += "}\n";
    emit(opts.out_dir, manifest, "oracle_summary.json", summary);
    finish_manifest(manifest, opts.out_dir);
    return 0;
}

int cmd_report(const RunOptions& opts) {
    if (opts.runs < 1) throw invalid_argument_error("report: --runs must be >= 1");
    const auto cfg = load_config(opts);
    fs::create_directories(opts.out_dir);
    auto manifest = start_manifest("report", cfg);
    const auto stats = run_ensemble(cfg, opts.runs, opts.parallelism);
    write_ensemble_outputs(opts.out_dir, manifest, stats, cfg);

    const std::size_t k = stats.support_size();

    // ensemble mean against the closed-form mean recursion
    std::string mean_check = "n,f,mean,se,closed_form,z\n";
    double max_abs_z = 0.0;
    for (std::uint32_t n = 0; n < stats.horizon; ++n) {
        for (std::size_t f = 0; f < k; ++f) {
            const double mean = stats.mean(n, f);
            const double se = stats.mean_se(n, f);
            const double closed = barycenter_value(stats, f, n);
            const double z = se > 0.0 ? (mean - closed) / se : 0.0;
            max_abs_z = std::max(max_abs_z, std::abs(z));
            mean_check += std::to_string(n) + "," + std::to_string(f) + "," + fmt_g17(mean) +
                          "," + fmt_g17(se) + "," + fmt_g17(closed) + "," + fmt_g17(z) + "\n";
        }
    }
    emit(opts.out_dir, manifest, "mean_check.csv", mean_check);

    // convex-noise diagnostic with g = square on the reachable grid
    std::vector<double> g_square(stats.batch_size + 1);
    for (std::size_t j = 0; j < g_square.size(); ++j) {
        const double x = static_cast<double>(j) / static_cast<double>(stats.batch_size);
        g_square[j] = x * x;
    }
    std::string jensen = "n,f,gap,se\n";
    double min_gap_z = 0.0;
    for (std::uint32_t n = 0; n < stats.horizon; ++n) {
        for (std::size_t f = 0; f < k; ++f) {
            const auto g = jensen_gap(stats, n, f, g_square);
            jensen += std::to_string(n) + "," + std::to_string(f) + "," + fmt_g17(g.gap) + "," +
                      fmt_g17(g.standard_error) + "\n";
            if (g.standard_error > 0.0)
                min_gap_z = std::min(min_gap_z, g.gap / g.standard_error);
        }
    }
    emit(opts.out_dir, manifest, "jensen_square.csv", jensen);

    double max_violation = 0.0;
    const bool martingale_regime = stats.fresh_prob == 0.0 && stats.parametric_weight == 0.0;
    if (martingale_regime) {
        std::string monotone = "n,f,second_moment,violation\n";
        for (std::size_t f = 0; f < k; ++f) {
            const auto violations = second_moment_monotone(stats, f);
            for (std::size_t n = 0; n < violations.size(); ++n) {
                monotone += std::to_string(n) + "," + std::to_string(f) + "," +
                            fmt_g17(stats.second_moment(static_cast<std::uint32_t>(n), f)) + "," +
                            fmt_g17(violations[n]) + "\n";
                max_violation = std::max(max_violation, violations[n]);
            }
        }
        emit(opts.out_dir, manifest, "second_moment_check.csv", monotone);
    }

    std::string diag = "{\n";
    diag += "  \"mean_check_max_abs_z\": " + fmt_g17(max_abs_z) + ",\n";
    diag += "  \"jensen_min_gap_z\": " + fmt_g17(min_gap_z) + ",\n";
    if (martingale_regime)
        diag += "  \"second_moment_max_violation\": " + fmt_g17(max_violation) + ",\n";
    if (stats.fresh_prob == 0.0) {
        const auto fix = fixation_histogram(stats);
        diag += "  \"collapsed\": " + std::to_string(fix.collapsed) + ",\n";
        diag += "  \"uncollapsed\": " + std::to_string(fix.uncollapsed) + ",\n";
        if (fix.uncollapsed > 0)
            std::cerr << "report: warning: " << fix.uncollapsed
                      << " trajectories had not collapsed by the horizon; fixation rows are a "
                         "partial result\n";
    }
    diag += "  \"n_runs\": " + std::to_string(stats.n_runs) + "\n";
    diag += "}\n";
    emit(opts.out_dir, manifest, "diagnostics.json", diag);
    finish_manifest(manifest, opts.out_dir);
    return 0;
}

int cmd_verify(const std::string& suite, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const auto results = run_verify_suite(suite, out_dir / "scratch");
    bool all_pass = true;
    for (const auto& r : results) {
        std::cout << criterion_line(r) << "\n";
        all_pass = all_pass && r.pass;
    }
    write_text_file(out_dir / "verify_report.json", verify_report_json(suite, results));
    std::cout << (all_pass ? "verify: all criteria passed" : "verify: criterion failure") << "\n";
    return all_pass ? 0 : 3;
}

}  // namespace collapsim
