// SPDX-License-Identifier: Apache-2.0

#include "collapsim/diagnostics.hpp"

#include <cmath>

#include "collapsim/errors.hpp"
#include "collapsim/kernels.hpp"

namespace collapsim {

namespace {

// Piecewise-linear evaluation of a function tabulated on {j/N}.
double eval_tabulated(std::span<const double> values, std::uint32_t batch_size, double x) {
    if (x <= 0.0) return values.front();
    if (x >= 1.0) return values.back();
    const double pos = x * static_cast<double>(batch_size);
    const std::size_t j = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(j);
    return values[j] * (1.0 - frac) + values[j + 1] * frac;
}

}  // namespace

ResidualReport martingale_residual(const GenerationState& state, const ExperimentConfig& cfg,
                                   std::uint64_t replicas, const TestFunction& f, RngStream& rng,
                                   ChainCoordinate coord, std::size_t f_index) {
    if (replicas < 100)
        throw invalid_argument_error("martingale_residual: needs at least 100 replicas");
    if (f.size() != cfg.support.size())
        throw invalid_argument_error("martingale_residual: test function size mismatch");

    const double contract =
        coord == ChainCoordinate::mu
            ? kern::dot(effective_sampling_measure(state, cfg).weights(), f.values())
            : kern::dot(state.theta.weights(), f.values());

    StepEngine engine(cfg);
    ProbVector mu = state.mu;
    ProbVector theta = state.theta;
    double sum = 0.0, sumsq = 0.0;
    for (std::uint64_t r = 0; r < replicas; ++r) {
        mu = state.mu;
        theta = state.theta;
        engine.advance(mu, theta, rng);
        const auto& target = coord == ChainCoordinate::mu ? mu : theta;
        const double residual = kern::dot(target.weights(), f.values()) - contract;
        sum += residual;
        sumsq += residual * residual;
    }

    const double n = static_cast<double>(replicas);
    const double mean = sum / n;
    double var = (sumsq - sum * sum / n) / (n - 1.0);
    if (var < 0.0) var = 0.0;
    return ResidualReport{mean, std::sqrt(var / n), replicas, f_index};
}

std::vector<double> barycenter_trajectory(const ExperimentConfig& cfg, const TestFunction& f,
                                          std::uint32_t horizon) {
    const double u = integrate(cfg.source_law, f);
    const double m0 = cfg.parametric_weight * integrate(cfg.theta_init, f) +
                      cfg.empirical_weight * u;
    std::vector<double> out;
    out.reserve(horizon + 1);
    for (std::uint32_t n = 0; n <= horizon; ++n)
        out.push_back(u + std::pow(1.0 - cfg.fresh_prob, static_cast<double>(n)) * (m0 - u));
    return out;
}

double barycenter_value(const EnsembleStats& stats, std::size_t f_index,
                        std::uint32_t generation) {
    const double u = stats.mu0_weights[f_index];
    const double m0 = stats.parametric_weight * stats.theta0_weights[f_index] +
                      stats.empirical_weight * u;
    return u + std::pow(1.0 - stats.fresh_prob, static_cast<double>(generation)) * (m0 - u);
}

JensenGap jensen_gap(const EnsembleStats& stats, std::uint32_t generation, std::size_t f_index,
                     std::span<const double> g_values) {
    if (generation >= stats.horizon)
        throw precondition_error("jensen_gap: generation " + std::to_string(generation) +
                                 " is past the stats horizon " + std::to_string(stats.horizon));
    if (g_values.size() != stats.batch_size + 1)
        throw invalid_argument_error("jensen_gap: g must be tabulated on the N+1 grid points");

    const double reference =
        eval_tabulated(g_values, stats.batch_size, barycenter_value(stats, f_index, generation));

    if (generation == 0) {
        const double gx = eval_tabulated(g_values, stats.batch_size, stats.mu0_weights[f_index]);
        return JensenGap{gx - reference, 0.0};
    }

    const auto h = stats.hist(generation, f_index);
    const double r = static_cast<double>(stats.n_runs);
    double mean_g = 0.0, mean_g2 = 0.0;
    for (std::size_t j = 0; j < h.size(); ++j) {
        if (h[j] == 0) continue;
        const double w = static_cast<double>(h[j]) / r;
        mean_g += w * g_values[j];
        mean_g2 += w * g_values[j] * g_values[j];
    }
    double var = mean_g2 - mean_g * mean_g;
    if (stats.n_runs > 1) var *= r / (r - 1.0);
    if (var < 0.0) var = 0.0;
    return JensenGap{mean_g - reference, std::sqrt(var / r)};
}

std::vector<double> second_moment_monotone(const EnsembleStats& stats, std::size_t f_index) {
    if (stats.fresh_prob != 0.0 || stats.parametric_weight != 0.0)
        throw precondition_error(
            "second_moment_monotone: the martingale argument needs a = 0 and b = 0 (got a = " +
            std::to_string(stats.fresh_prob) + ", b = " + std::to_string(stats.parametric_weight) +
            ")");

    std::vector<double> violations;
    if (stats.horizon < 2) return violations;
    violations.reserve(stats.horizon - 1);
    for (std::uint32_t n = 0; n + 1 < stats.horizon; ++n) {
        const double m2a = stats.second_moment(n, f_index);
        const double m2b = stats.second_moment(n + 1, f_index);
        const double sea = stats.second_moment_se(n, f_index);
        const double seb = stats.second_moment_se(n + 1, f_index);
        const double band = 4.0 * std::sqrt(sea * sea + seb * seb);
        const double v = m2a - m2b - band;
        violations.push_back(v > 0.0 ? v : 0.0);
    }
    return violations;
}

FixationHistogram fixation_histogram(const EnsembleStats& stats) {
    if (stats.fresh_prob != 0.0)
        throw precondition_error("fixation_histogram: fixation is defined for a = 0 runs only");

    FixationHistogram out;
    out.collapsed = stats.collapsed_total();
    out.uncollapsed = stats.uncollapsed();
    out.frequencies.assign(stats.support_size(), 0.0);
    if (out.collapsed > 0) {
        for (std::size_t i = 0; i < stats.fixation_counts.size(); ++i)
            out.frequencies[i] = static_cast<double>(stats.fixation_counts[i]) /
                                 static_cast<double>(out.collapsed);
    }
    return out;
}

}  // namespace collapsim
