// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace collapsim {

struct CriterionResult {
    std::string id;    // "C1".."C10", "CB"
    std::string name;  // short slug
    bool pass = false;
    double measured = 0.0;
    double expected = 0.0;
    double tolerance = 0.0;
    std::string detail;  // sub-check values, seeds, failure notes
    std::uint64_t seed = 0;
    double runtime_seconds = 0.0;
    double runtime_limit = 0.0;  // 0 = unlimited
};

// Named acceptance suites. "all" runs every shipped criterion;
// "selftest-bias" is a deliberately biased fixture that must fail, proving
// the harness detects a flipped multinomial weight.
const std::vector<std::string>& verify_suite_names();

// Runs a suite; scratch_dir is used for criteria that exercise the file
// surface (determinism). Throws invalid_argument_error for unknown suites.
std::vector<CriterionResult> run_verify_suite(const std::string& suite,
                                              const std::filesystem::path& scratch_dir);

std::string criterion_line(const CriterionResult& r);
std::string verify_report_json(const std::string& suite,
                               const std::vector<CriterionResult>& results);

}  // namespace collapsim
