// SPDX-License-Identifier: Apache-2.0

#include "collapsim/output.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include "collapsim/config_text.hpp"
#include "collapsim/errors.hpp"
#include "collapsim/fmt.hpp"

namespace collapsim {

namespace {

std::string join_numbers(std::span<const double> xs, char sep = ',') {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i > 0) out += sep;
        out += fmt_g17(xs[i]);
    }
    return out;
}

std::string json_number_array(std::span<const double> xs) {
    return "[" + join_numbers(xs) + "]";
}

std::string json_int_array(std::span<const std::int64_t> xs) {
    std::string out = "[";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i > 0) out += ',';
        out += std::to_string(xs[i]);
    }
    return out + "]";
}

}  // namespace

std::string json_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open output file: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("failed writing output file: " + path.string());
}

std::string iso8601_utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string manifest_json(const RunManifest& m) {
    std::string out = "{\n";
    out += "  \"artifact_version\": \"" + json_escape(m.artifact_version) + "\",\n";
    out += "  \"subcommand\": \"" + json_escape(m.subcommand) + "\",\n";
    out += "  \"config_digest\": \"" + json_escape(m.config_digest) + "\",\n";
    out += "  \"master_seed\": " + std::to_string(m.master_seed) + ",\n";
    out += "  \"seed_policy\": \"" + json_escape(m.seed_policy) + "\",\n";
    out += "  \"kernel_backend\": \"" + json_escape(m.kernel_backend) + "\",\n";
    out += "  \"started_at\": \"" + json_escape(m.started_at) + "\",\n";
    out += "  \"finished_at\": \"" + json_escape(m.finished_at) + "\",\n";
    out += "  \"outputs\": [";
    for (std::size_t i = 0; i < m.outputs.size(); ++i) {
        if (i > 0) out += ", ";
        out += "\"" + json_escape(m.outputs[i]) + "\"";
    }
    out += "]\n}\n";
    return out;
}

std::string trajectory_rows_jsonl(const TrajectoryRecord& rec) {
    std::string out;
    for (const auto& row : rec.rows) {
        out += "{\"n\":" + std::to_string(row.n);
        out += ",\"mu\":" + json_number_array(row.mu.weights());
        out += ",\"theta\":" + json_number_array(row.theta.weights());
        out += ",\"effective_support\":" + std::to_string(row.effective_support_size);
        out += ",\"collapsed\":";
        out += row.collapsed ? "true" : "false";
        out += "}\n";
    }
    return out;
}

std::string ensemble_summary_json(const EnsembleStats& stats, const ExperimentConfig& cfg) {
    const std::size_t k = stats.support_size();
    std::string out = "{\n";
    out += "  \"schema\": \"collapsim-ensemble-summary-v1\",\n";
    out += "  \"config_digest\": \"" + config_digest(cfg) + "\",\n";
    out += "  \"config\": {";
    out += "\"a\": " + fmt_g17(cfg.fresh_prob);
    out += ", \"b\": " + fmt_g17(cfg.parametric_weight);
    out += ", \"c\": " + fmt_g17(cfg.empirical_weight);
    out += ", \"N\": " + std::to_string(cfg.batch_size);
    out += ", \"K\": " + std::to_string(k);
    out += ", \"horizon\": " + std::to_string(cfg.horizon);
    out += ", \"master_seed\": " + std::to_string(cfg.master_seed);
    out += ", \"mu0\": " + json_number_array(cfg.source_law.weights());
    out += ", \"theta0\": " + json_number_array(cfg.theta_init.weights());
    out += "},\n";
    out += "  \"n_runs\": " + std::to_string(stats.n_runs) + ",\n";

    out += "  \"generations\": [\n";
    const double runs = static_cast<double>(stats.n_runs);
    for (std::uint32_t n = 0; n < stats.horizon; ++n) {
        std::vector<double> mean(k), variance(k), m2(k);
        for (std::size_t f = 0; f < k; ++f) {
            mean[f] = stats.mean(n, f);
            variance[f] = stats.variance(n, f);
            m2[f] = stats.second_moment(n, f);
        }
        out += "    {\"n\":" + std::to_string(n);
        out += ",\"mean\":" + json_number_array(mean);
        out += ",\"variance\":" + json_number_array(variance);
        out += ",\"second_moment\":" + json_number_array(m2);
        out += ",\"collapsed_fraction\":" +
               fmt_g17(static_cast<double>(stats.collapsed_by(n)) / runs);
        out += "}";
        out += n + 1 < stats.horizon ? ",\n" : "\n";
    }
    out += "  ],\n";

    if (stats.value_hist.size() <= 100000) {
        out += "  \"value_histograms\": [\n";
        for (std::uint32_t n = 1; n < stats.horizon; ++n) {
            out += "    [";
            for (std::size_t f = 0; f < k; ++f) {
                if (f > 0) out += ",";
                out += json_int_array(stats.hist(n, f));
            }
            out += "]";
            out += n + 1 < stats.horizon ? ",\n" : "\n";
        }
        out += "  ],\n";
    }

    out += "  \"collapse_time_histogram\": " + json_int_array(stats.collapse_time_hist) + ",\n";
    out += "  \"collapsed_total\": " + std::to_string(stats.collapsed_total()) + ",\n";
    out += "  \"uncollapsed\": " + std::to_string(stats.uncollapsed()) + ",\n";
    out += "  \"fixation_counts\": " + json_int_array(stats.fixation_counts) + ",\n";
    std::vector<double> freqs(k, 0.0);
    const auto collapsed = stats.collapsed_total();
    if (collapsed > 0)
        for (std::size_t f = 0; f < k; ++f)
            freqs[f] =
                static_cast<double>(stats.fixation_counts[f]) / static_cast<double>(collapsed);
    out += "  \"fixation_frequencies\": " + json_number_array(freqs) + "\n";
    out += "}\n";
    return out;
}

std::string mean_trajectories_csv(const EnsembleStats& stats) {
    const std::size_t k = stats.support_size();
    std::string out = "n";
    for (std::size_t f = 0; f < k; ++f) out += ",mean_f" + std::to_string(f);
    for (std::size_t f = 0; f < k; ++f) out += ",variance_f" + std::to_string(f);
    out += ",collapsed_fraction\n";
    const double runs = static_cast<double>(stats.n_runs);
    for (std::uint32_t n = 0; n < stats.horizon; ++n) {
        out += std::to_string(n);
        for (std::size_t f = 0; f < k; ++f) out += "," + fmt_g17(stats.mean(n, f));
        for (std::size_t f = 0; f < k; ++f) out += "," + fmt_g17(stats.variance(n, f));
        out += "," + fmt_g17(static_cast<double>(stats.collapsed_by(n)) / runs) + "\n";
    }
    return out;
}

std::string collapse_times_csv(const EnsembleStats& stats) {
    std::string out = "generation,count\n";
    for (std::size_t n = 0; n < stats.collapse_time_hist.size(); ++n)
        out += std::to_string(n) + "," + std::to_string(stats.collapse_time_hist[n]) + "\n";
    out += "uncollapsed," + std::to_string(stats.uncollapsed()) + "\n";
    return out;
}

std::string fixation_csv(const EnsembleStats& stats, const Support& support) {
    std::string out = "atom,label,count,frequency\n";
    const auto collapsed = stats.collapsed_total();
    for (std::size_t f = 0; f < stats.fixation_counts.size(); ++f) {
        const double freq = collapsed > 0 ? static_cast<double>(stats.fixation_counts[f]) /
                                                static_cast<double>(collapsed)
                                          : 0.0;
        out += std::to_string(f) + "," + support.labels()[f] + "," +
               std::to_string(stats.fixation_counts[f]) + "," + fmt_g17(freq) + "\n";
    }
    return out;
}

std::string states_csv(const OracleChain& chain) {
    std::string out = "index,label";
    const std::size_t k = chain.source_law().size();
    for (std::size_t j = 0; j < k; ++j) out += ",count" + std::to_string(j);
    out += ",absorbing\n";
    for (std::size_t i = 0; i < chain.size(); ++i) {
        out += std::to_string(i) + "," + chain.states()[i].label();
        for (std::uint32_t c : chain.states()[i].counts) out += "," + std::to_string(c);
        out += chain.is_absorbing(i) ? ",1\n" : ",0\n";
    }
    return out;
}

std::string transition_matrix_csv(const OracleChain& chain) {
    std::string out = "from";
    for (std::size_t j = 0; j < chain.size(); ++j) out += ",to_" + chain.states()[j].label();
    out += "\n";
    for (std::size_t i = 0; i < chain.size(); ++i) {
        out += chain.states()[i].label();
        for (double p : chain.row(i)) out += "," + fmt_g17(p);
        out += "\n";
    }
    return out;
}

std::string absorption_probs_csv(const OracleChain& chain, const AbsorptionProbs& probs) {
    std::string out = "from";
    for (std::size_t a : probs.absorbing) out += ",fix_" + chain.states()[a].label();
    out += "\n";
    for (std::size_t i = 0; i < chain.size(); ++i) {
        out += chain.states()[i].label();
        for (double p : probs.row(i)) out += "," + fmt_g17(p);
        out += "\n";
    }
    return out;
}

std::string absorption_times_csv(const OracleChain& chain, const std::vector<double>& times) {
    std::string out = "state,expected_generations\n";
    for (std::size_t i = 0; i < chain.size(); ++i)
        out += chain.states()[i].label() + "," + fmt_g17(times[i]) + "\n";
    return out;
}

std::string stationary_csv(const OracleChain& chain, const StationaryResult& st) {
    std::string out = "state";
    for (std::size_t d = 0; d < st.distributions.size(); ++d)
        out += ",pi" + std::to_string(d);
    out += "\n";
    for (std::size_t i = 0; i < chain.size(); ++i) {
        out += chain.states()[i].label();
        for (const auto& dist : st.distributions) out += "," + fmt_g17(dist[i]);
        out += "\n";
    }
    return out;
}

}  // namespace collapsim
