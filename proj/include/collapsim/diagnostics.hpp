// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "collapsim/dynamics.hpp"
#include "collapsim/measure.hpp"
#include "collapsim/rng.hpp"

namespace collapsim {

enum class ChainCoordinate { mu, theta };

struct ResidualReport {
    double mean_residual = 0.0;
    double standard_error = 0.0;
    std::uint64_t replicas = 0;
    std::size_t test_function_index = 0;
};

// One-step conditional-expectation residual: branches `replicas` independent
// step copies from the same state and compares the replica mean of mu'(f)
// (or theta'(f)) against its exact contract value, integrate(effective
// measure, f) (or theta(f)). An unbiased step keeps |mean| within a few
// standard errors of zero.
ResidualReport martingale_residual(const GenerationState& state, const ExperimentConfig& cfg,
                                   std::uint64_t replicas, const TestFunction& f, RngStream& rng,
                                   ChainCoordinate coord = ChainCoordinate::mu,
                                   std::size_t f_index = 0);

// Deterministic mean recursion in closed form:
//   out[n] = mu0(f) + (1-a)^n * (m0 - mu0(f)),  m0 = b*theta0(f) + c*mu0(f),
// for n = 0..horizon.
std::vector<double> barycenter_trajectory(const ExperimentConfig& cfg, const TestFunction& f,
                                          std::uint32_t horizon);

// Same value at a single generation, evaluated from ensemble echo fields.
double barycenter_value(const EnsembleStats& stats, std::size_t f_index, std::uint32_t generation);

struct JensenGap {
    double gap = 0.0;
    double standard_error = 0.0;
};

// E[g(mu_n(f))] - g(mean recursion value) for a convex g tabulated on the
// reachable grid {j/N} (g_values has N+1 entries; piecewise-linear off-grid).
// Nonnegative within noise by conditional Jensen.
JensenGap jensen_gap(const EnsembleStats& stats, std::uint32_t generation, std::size_t f_index,
                     std::span<const double> g_values);

// Second-moment monotonicity of the bounded martingale mu_n(f) (a = 0, b = 0
// only): per generation pair, max(0, m2[n] - m2[n+1] - 4*se) where se joins
// the two CLT bands. All zeros = pass.
std::vector<double> second_moment_monotone(const EnsembleStats& stats, std::size_t f_index);

struct FixationHistogram {
    std::vector<double> frequencies;  // over atoms, collapsed trajectories only
    std::int64_t collapsed = 0;
    std::int64_t uncollapsed = 0;  // > 0 means a partial result
};

// Fraction of trajectories absorbed at each atom (a = 0 runs).
FixationHistogram fixation_histogram(const EnsembleStats& stats);

}  // namespace collapsim
