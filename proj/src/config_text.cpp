// SPDX-License-Identifier: Apache-2.0

#include "collapsim/config_text.hpp"

#include <array>
#include <cstdlib>
#include <vector>

#include "collapsim/errors.hpp"
#include "collapsim/fmt.hpp"

namespace collapsim {

namespace {

constexpr std::array<std::string_view, 11> kKnownKeys = {
    "a", "b", "c", "N", "K", "horizon", "master_seed",
    "mu0", "theta0", "coords", "source_choice"};

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

double parse_double(const std::string& key, std::string_view v) {
    const std::string s(v);
    char* end = nullptr;
    const double x = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw invalid_argument_error("config: key '" + key + "' is not a number: '" + s + "'");
    return x;
}

std::uint64_t parse_uint(const std::string& key, std::string_view v) {
    const std::string s(v);
    char* end = nullptr;
    if (!s.empty() && s[0] == '-')
        throw invalid_argument_error("config: key '" + key + "' must be nonnegative: '" + s + "'");
    const std::uint64_t x = std::strtoull(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0')
        throw invalid_argument_error("config: key '" + key + "' is not an integer: '" + s + "'");
    return x;
}

std::vector<double> parse_list(const std::string& key, std::string_view v) {
    std::vector<double> out;
    std::string token;
    auto flush = [&] {
        if (!token.empty()) {
            out.push_back(parse_double(key, token));
            token.clear();
        }
    };
    for (char ch : v) {
        if (ch == ' ' || ch == '\t' || ch == ',')
            flush();
        else
            token.push_back(ch);
    }
    flush();
    if (out.empty())
        throw invalid_argument_error("config: key '" + key + "' needs at least one number");
    return out;
}

void insert_entry(ConfigEntries& entries, std::string_view key_sv, std::string_view value_sv,
                  bool allow_replace) {
    const std::string key(key_sv);
    bool known = false;
    for (auto k : kKnownKeys) known = known || k == key;
    if (!known) throw invalid_argument_error("config: unknown key '" + key + "'");
    if (!allow_replace && entries.count(key) != 0)
        throw invalid_argument_error("config: duplicate key '" + key + "'");
    entries[key] = std::string(trim(value_sv));
}

std::string join_g17(std::span<const double> xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i > 0) out += ' ';
        out += fmt_g17(xs[i]);
    }
    return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

ConfigEntries parse_config_entries(std::string_view text) {
    ConfigEntries entries;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const std::size_t nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        ++line_no;

        const std::size_t hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw invalid_argument_error("config: line " + std::to_string(line_no) +
                                         " is not 'key = value'");
        insert_entry(entries, trim(line.substr(0, eq)), line.substr(eq + 1), false);
    }
    return entries;
}

void apply_override(ConfigEntries& entries, std::string_view assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string_view::npos)
        throw invalid_argument_error("override must be key=value: '" + std::string(assignment) + "'");
    insert_entry(entries, trim(assignment.substr(0, eq)), assignment.substr(eq + 1), true);
}

ExperimentConfig config_from_entries(const ConfigEntries& entries) {
    auto require = [&](const char* key) -> const std::string& {
        auto it = entries.find(key);
        if (it == entries.end())
            throw invalid_argument_error("config: missing required key '" + std::string(key) + "'");
        return it->second;
    };

    const std::uint64_t k = parse_uint("K", require("K"));
    if (k == 0) throw invalid_argument_error("config: K must be >= 1");

    std::vector<double> coords;
    if (auto it = entries.find("coords"); it != entries.end())
        coords = parse_list("coords", it->second);

    ExperimentConfig cfg;
    cfg.fresh_prob = parse_double("a", require("a"));
    cfg.parametric_weight = parse_double("b", require("b"));
    cfg.empirical_weight = parse_double("c", require("c"));
    const std::uint64_t n = parse_uint("N", require("N"));
    if (n == 0 || n > 0xffffffffULL) throw invalid_argument_error("config: N out of range");
    cfg.batch_size = static_cast<std::uint32_t>(n);
    const std::uint64_t horizon = parse_uint("horizon", require("horizon"));
    if (horizon == 0 || horizon > 0xffffffffULL)
        throw invalid_argument_error("config: horizon out of range");
    cfg.horizon = static_cast<std::uint32_t>(horizon);
    cfg.master_seed = parse_uint("master_seed", require("master_seed"));
    cfg.support = Support(static_cast<std::size_t>(k), std::move(coords));

    const auto mu0 = parse_list("mu0", require("mu0"));
    if (mu0.size() != k)
        throw invalid_argument_error("config: mu0 must have K = " + std::to_string(k) +
                                     " weights (got " + std::to_string(mu0.size()) + ")");
    cfg.source_law = ProbVector(mu0);

    if (auto it = entries.find("theta0"); it != entries.end()) {
        const auto theta0 = parse_list("theta0", it->second);
        if (theta0.size() != k)
            throw invalid_argument_error("config: theta0 must have K = " + std::to_string(k) +
                                         " weights (got " + std::to_string(theta0.size()) + ")");
        cfg.theta_init = ProbVector(theta0);
    } else {
        cfg.theta_init = cfg.source_law;
    }

    if (auto it = entries.find("source_choice"); it != entries.end()) {
        if (it->second != "per_sample")
            throw invalid_argument_error("config: source_choice must be 'per_sample' (got '" +
                                         it->second + "')");
    }
    cfg.source_choice = SourceChoice::per_sample;

    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config_text(std::string_view text) {
    return config_from_entries(parse_config_entries(text));
}

std::string canonical_config_text(const ExperimentConfig& cfg) {
    std::string out;
    out += "a = " + fmt_g17(cfg.fresh_prob) + "\n";
    out += "b = " + fmt_g17(cfg.parametric_weight) + "\n";
    out += "c = " + fmt_g17(cfg.empirical_weight) + "\n";
    out += "N = " + std::to_string(cfg.batch_size) + "\n";
    out += "K = " + std::to_string(cfg.support.size()) + "\n";
    out += "horizon = " + std::to_string(cfg.horizon) + "\n";
    out += "master_seed = " + std::to_string(cfg.master_seed) + "\n";
    out += "source_choice = per_sample\n";
    out += "mu0 = " + join_g17(cfg.source_law.weights()) + "\n";
    out += "theta0 = " + join_g17(cfg.theta_init.weights()) + "\n";
    if (cfg.support.has_coords()) out += "coords = " + join_g17(cfg.support.coords()) + "\n";
    return out;
}

std::string config_digest(const ExperimentConfig& cfg) {
    const std::uint64_t h = fnv1a64(canonical_config_text(cfg));
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace collapsim
