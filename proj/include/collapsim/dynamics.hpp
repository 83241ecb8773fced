// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "collapsim/measure.hpp"
#include "collapsim/rng.hpp"

namespace collapsim {

enum class SourceChoice { per_sample };

// Origin of one batch sample: the external source, the parametric generator,
// or the previous empirical law. Values match the classify3 kernel output.
enum class SourceTag : std::uint8_t { fresh = 0, parametric = 1, empirical = 2 };

struct ExperimentConfig {
    double fresh_prob = 0.0;         // a: per-sample probability of the external source
    double parametric_weight = 0.0;  // b: generative mixture weight on P_theta
    double empirical_weight = 1.0;   // c: generative mixture weight on mu_n (b + c = 1)
    std::uint32_t batch_size = 1;    // N: samples per generation
    Support support{1};
    ProbVector source_law = ProbVector::uniform(1);  // mu0
    ProbVector theta_init = ProbVector::uniform(1);  // theta0 (defaults to mu0 in configs)
    std::uint32_t horizon = 1;       // states recorded per trajectory (n = 0..horizon-1)
    std::uint64_t master_seed = 0;
    SourceChoice source_choice = SourceChoice::per_sample;

    // Throws invalid_argument_error with a message naming the violated field.
    void validate() const;
};

struct GenerationState {
    std::uint32_t n = 0;
    ProbVector mu;
    ProbVector theta;
};

struct BatchRecord {
    std::vector<std::uint32_t> samples;
    std::vector<SourceTag> source_tags;
    ProbVector nu;  // b*P_theta + c*mu_n used for this generation
};

struct TrajectoryRow {
    std::uint32_t n;
    ProbVector mu;
    ProbVector theta;
    std::uint32_t effective_support_size;
    bool collapsed;
};

struct TrajectoryRecord {
    std::string config_digest;
    std::uint64_t master_seed = 0;
    std::uint64_t trajectory_index = 0;
    std::vector<TrajectoryRow> rows;
    std::optional<std::uint32_t> collapse_time;
};

// Per-sample law of one generation step: a*mu0 + (1-a)*(b*theta + c*mu).
ProbVector effective_sampling_measure(const GenerationState& state, const ExperimentConfig& cfg);

// Empirical frequency of the parametric-tagged sub-batch; the previous theta
// when the sub-batch is empty. Keeps E[theta' | theta] = theta.
ProbVector fit_theta(std::span<const std::uint32_t> parametric_samples,
                     const ProbVector& theta_prev);

// True iff a = 0 and the effective sampling measure is a Dirac; such states
// are exact fixed points of the step.
bool is_absorbed(const GenerationState& state, const ExperimentConfig& cfg);

// Reusable per-config workspace for the generation step; advance() performs
// one generation in place without allocating.
class StepEngine {
  public:
    explicit StepEngine(const ExperimentConfig& cfg);

    // Draws N tag coins then N atom coins from rng (that order is a frozen
    // contract), overwrites mu and theta with the next generation, and leaves
    // the batch's atom counts in counts().
    void advance(ProbVector& mu, ProbVector& theta, RngStream& rng, BatchRecord* batch = nullptr);

    std::span<const std::uint32_t> counts() const noexcept { return counts_; }

    // Support size of a*mu0 + (1-a)*(b*theta + c*mu), allocation-free.
    std::uint32_t effective_support(const ProbVector& mu, const ProbVector& theta);
    // Atom carrying the effective measure; valid right after
    // effective_support() returned 1.
    std::uint32_t effective_single_atom() const;

  private:
    const ExperimentConfig* cfg_;
    std::size_t k_;
    std::uint32_t n_;
    double tag_t1_, tag_t2_;
    std::vector<double> cdfs_;  // 3 x k rows: mu0 | theta | mu
    std::vector<double> u_;     // 2N uniforms per generation
    std::vector<std::uint8_t> tags_;
    std::vector<std::uint32_t> samples_;
    std::vector<std::uint32_t> counts_;
    std::vector<std::uint32_t> par_counts_;
    std::vector<double> eff_;
};

// One generation of the chain; requires state.n < cfg.horizon.
std::pair<GenerationState, BatchRecord> step(const GenerationState& state,
                                             const ExperimentConfig& cfg, RngStream& rng);

// Ensemble sufficient statistics. Everything is accumulated in integers
// (value histograms of mu_n(f_i) on the count grid, collapse times, fixation
// counts), so aggregation is exactly order-independent and results are
// byte-identical for any parallelism degree. Test functions are the CDC
// indicators, i.e. column f tracks mu_n({atom f}).
struct EnsembleStats {
    explicit EnsembleStats(const ExperimentConfig& cfg);

    // --- config echo ---
    double fresh_prob = 0.0;
    double parametric_weight = 0.0;
    double empirical_weight = 1.0;
    std::uint32_t batch_size = 1;
    std::uint32_t horizon = 1;
    std::uint64_t master_seed = 0;
    std::vector<double> mu0_weights;
    std::vector<double> theta0_weights;

    // --- accumulators ---
    std::uint64_t n_runs = 0;
    // value_hist[(gen-1)*K*(N+1) + f*(N+1) + j]: runs with mu_gen(f) = j/N, gen >= 1
    std::vector<std::int64_t> value_hist;
    std::vector<std::int64_t> collapse_time_hist;  // index: generation of absorption
    std::vector<std::int64_t> fixation_counts;     // per atom, absorbed runs only

    std::size_t support_size() const noexcept { return mu0_weights.size(); }

    void record_value(std::uint32_t gen, std::size_t f, std::uint32_t count);
    void record_collapse(std::uint32_t gen, std::uint32_t atom);
    void merge(const EnsembleStats& other);

    // --- derived statistics (generation 0 is the deterministic initial state) ---
    std::span<const std::int64_t> hist(std::uint32_t gen, std::size_t f) const;
    double raw_moment(std::uint32_t gen, std::size_t f, int order) const;
    double mean(std::uint32_t gen, std::size_t f) const;
    double second_moment(std::uint32_t gen, std::size_t f) const;
    double variance(std::uint32_t gen, std::size_t f) const;  // unbiased across runs
    double mean_se(std::uint32_t gen, std::size_t f) const;
    double second_moment_se(std::uint32_t gen, std::size_t f) const;

    std::int64_t collapsed_total() const;
    std::int64_t uncollapsed() const { return static_cast<std::int64_t>(n_runs) - collapsed_total(); }
    std::int64_t collapsed_by(std::uint32_t gen) const;  // cumulative through gen
};

// Runs one seeded trajectory from (mu0, theta0) until horizon or absorption.
TrajectoryRecord run_trajectory(const ExperimentConfig& cfg, std::uint64_t trajectory_index);

// Independent trajectories with streams (master_seed, 0..n_runs-1).
EnsembleStats run_ensemble(const ExperimentConfig& cfg, std::uint64_t n_runs,
                           unsigned parallelism = 1);

}  // namespace collapsim
