// SPDX-License-Identifier: Apache-2.0

#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "collapsim/commands.hpp"
#include "collapsim/errors.hpp"

namespace {

// exit codes: 0 success, 1 validation/usage, 2 resource limit, 3 criterion failure
constexpr int kExitValidation = 1;
constexpr int kExitResource = 2;

void add_common(CLI::App* sub, collapsim::RunOptions& opts, bool with_runs,
                bool with_parallelism) {
    sub->add_option("--config", opts.config_path, "experiment config file")->required();
    sub->add_option("--out", opts.out_dir, "output directory")->required();
    sub->add_option("--override", opts.overrides,
                    "config override key=value (repeatable, applied in order)");
    sub->add_option("--seed", opts.seed, "master seed override (applied last)");
    if (with_runs) sub->add_option("--runs", opts.runs, "number of trajectories");
    if (with_parallelism)
        sub->add_option("--parallelism", opts.parallelism,
                        "worker threads (results are identical for any value)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"collapsim: recursive-training measure dynamics simulator and exact-oracle "
                 "verifier"};
    app.set_version_flag("--version", std::string("collapsim ") + collapsim::kArtifactVersion);
    app.require_subcommand(1);

    collapsim::RunOptions run_opts, ens_opts, oracle_opts, report_opts;
    std::string suite;
    std::string verify_out;

    auto* run = app.add_subcommand("run", "simulate seeded trajectories, one row stream each");
    add_common(run, run_opts, true, false);

    auto* ensemble = app.add_subcommand("ensemble", "Monte Carlo ensemble with summary outputs");
    add_common(ensemble, ens_opts, true, true);

    auto* oracle = app.add_subcommand(
        "oracle", "exact transition matrix plus absorption or stationary solves (b = 0)");
    add_common(oracle, oracle_opts, false, false);

    auto* report =
        app.add_subcommand("report", "ensemble plus diagnostics tables (CSV/JSON, data only)");
    add_common(report, report_opts, true, true);

    auto* verify = app.add_subcommand("verify", "run a named acceptance suite");
    verify->add_option("--suite", suite, "suite name (e.g. all, collapse-small)")->required();
    verify->add_option("--out", verify_out, "output directory for the report")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;  // --help/--version exit 0
    }

    try {
        if (run->parsed()) return collapsim::cmd_run(run_opts);
        if (ensemble->parsed()) return collapsim::cmd_ensemble(ens_opts);
        if (oracle->parsed()) return collapsim::cmd_oracle(oracle_opts);
        if (report->parsed()) return collapsim::cmd_report(report_opts);
        if (verify->parsed()) return collapsim::cmd_verify(suite, verify_out);
    } catch (const collapsim::resource_limit_error& e) {
        std::cerr << "error (resource limit): " << e.what() << "\n";
        return kExitResource;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitValidation;
}
