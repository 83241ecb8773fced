// SPDX-License-Identifier: Apache-2.0

#include "collapsim/dynamics.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "collapsim/config_text.hpp"
#include "collapsim/errors.hpp"
#include "collapsim/kernels.hpp"

namespace collapsim {

namespace {

void inclusive_prefix(std::span<const double> w, double* out) {
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        acc += w[i];
        out[i] = acc;
    }
}

}  // namespace

void ExperimentConfig::validate() const {
    if (!(fresh_prob >= 0.0 && fresh_prob <= 1.0))
        throw invalid_argument_error("config: a must lie in [0, 1] (got " +
                                     std::to_string(fresh_prob) + ")");
    if (!(parametric_weight >= 0.0) || !(empirical_weight >= 0.0))
        throw invalid_argument_error("config: b and c must be nonnegative");
    const double bc = parametric_weight + empirical_weight;
    if (std::abs(bc - 1.0) > 1e-12)
        throw invalid_argument_error("config: b + c must equal 1 within 1e-12 (got b + c = " +
                                     std::to_string(bc) + ")");
    if (batch_size < 1) throw invalid_argument_error("config: N must be >= 1");
    if (horizon < 1) throw invalid_argument_error("config: horizon must be >= 1");
    if (source_law.size() != support.size())
        throw invalid_argument_error("config: mu0 must have K = " +
                                     std::to_string(support.size()) + " weights");
    if (theta_init.size() != support.size())
        throw invalid_argument_error("config: theta0 must have K = " +
                                     std::to_string(support.size()) + " weights");
}

ProbVector effective_sampling_measure(const GenerationState& state, const ExperimentConfig& cfg) {
    const double a = cfg.fresh_prob;
    return mix3_unchecked(a, cfg.source_law, (1.0 - a) * cfg.parametric_weight, state.theta,
                          (1.0 - a) * cfg.empirical_weight, state.mu);
}

ProbVector fit_theta(std::span<const std::uint32_t> parametric_samples,
                     const ProbVector& theta_prev) {
    if (parametric_samples.empty()) return theta_prev;
    std::vector<std::uint32_t> counts(theta_prev.size(), 0);
    for (std::uint32_t idx : parametric_samples) {
        if (idx >= theta_prev.size())
            throw invalid_argument_error("fit_theta: atom index out of range");
        ++counts[idx];
    }
    return ProbVector::from_counts(counts);
}

bool is_absorbed(const GenerationState& state, const ExperimentConfig& cfg) {
    if (cfg.fresh_prob != 0.0) return false;
    return effective_sampling_measure(state, cfg).support_size() == 1;
}

StepEngine::StepEngine(const ExperimentConfig& cfg)
    : cfg_(&cfg),
      k_(cfg.support.size()),
      n_(cfg.batch_size),
      tag_t1_(cfg.fresh_prob),
      tag_t2_(cfg.fresh_prob + (1.0 - cfg.fresh_prob) * cfg.parametric_weight),
      cdfs_(3 * cfg.support.size()),
      u_(2 * static_cast<std::size_t>(cfg.batch_size)),
      tags_(cfg.batch_size),
      samples_(cfg.batch_size),
      counts_(cfg.support.size()),
      par_counts_(cfg.support.size()),
      eff_(cfg.support.size()) {
    inclusive_prefix(cfg.source_law.weights(), cdfs_.data());  // row 0 is constant
}

void StepEngine::advance(ProbVector& mu, ProbVector& theta, RngStream& rng, BatchRecord* batch) {
    inclusive_prefix(theta.weights(), cdfs_.data() + k_);
    inclusive_prefix(mu.weights(), cdfs_.data() + 2 * k_);

    rng.fill_u01(u_.data(), n_);       // tag coins
    rng.fill_u01(u_.data() + n_, n_);  // atom coins

    kern::classify3({u_.data(), n_}, tag_t1_, tag_t2_, tags_);
    kern::categorical_tagged(cdfs_.data(), k_, tags_, {u_.data() + n_, n_}, samples_);

    std::fill(counts_.begin(), counts_.end(), 0u);
    std::fill(par_counts_.begin(), par_counts_.end(), 0u);
    std::uint32_t par_total = 0;
    for (std::uint32_t i = 0; i < n_; ++i) {
        ++counts_[samples_[i]];
        if (tags_[i] == static_cast<std::uint8_t>(SourceTag::parametric)) {
            ++par_counts_[samples_[i]];
            ++par_total;
        }
    }

    if (batch != nullptr) {
        batch->samples.assign(samples_.begin(), samples_.end());
        batch->source_tags.resize(n_);
        for (std::uint32_t i = 0; i < n_; ++i) batch->source_tags[i] = SourceTag{tags_[i]};
        batch->nu.assign_mix2(cfg_->parametric_weight, theta, cfg_->empirical_weight, mu);
    }

    if (par_total > 0) theta.assign_from_counts(par_counts_);
    mu.assign_from_counts(counts_);
}

std::uint32_t StepEngine::effective_support(const ProbVector& mu, const ProbVector& theta) {
    const double a = cfg_->fresh_prob;
    kern::weighted_sum3(a, cfg_->source_law.weights(), (1.0 - a) * cfg_->parametric_weight,
                        theta.weights(), (1.0 - a) * cfg_->empirical_weight, mu.weights(), eff_);
    std::uint32_t nz = 0;
    for (double w : eff_) nz += w > 0.0;
    return nz;
}

std::uint32_t StepEngine::effective_single_atom() const {
    for (std::size_t i = 0; i < eff_.size(); ++i)
        if (eff_[i] > 0.0) return static_cast<std::uint32_t>(i);
    return 0;  // unreachable for a valid measure
}

std::pair<GenerationState, BatchRecord> step(const GenerationState& state,
                                             const ExperimentConfig& cfg, RngStream& rng) {
    if (state.n >= cfg.horizon)
        throw precondition_error("step: generation index " + std::to_string(state.n) +
                                 " is at or past the horizon " + std::to_string(cfg.horizon));
    StepEngine engine(cfg);
    GenerationState next{state.n + 1, state.mu, state.theta};
    BatchRecord batch{{}, {}, state.mu};
    engine.advance(next.mu, next.theta, rng, &batch);
    return {std::move(next), std::move(batch)};
}

EnsembleStats::EnsembleStats(const ExperimentConfig& cfg)
    : fresh_prob(cfg.fresh_prob),
      parametric_weight(cfg.parametric_weight),
      empirical_weight(cfg.empirical_weight),
      batch_size(cfg.batch_size),
      horizon(cfg.horizon),
      master_seed(cfg.master_seed),
      mu0_weights(cfg.source_law.weights().begin(), cfg.source_law.weights().end()),
      theta0_weights(cfg.theta_init.weights().begin(), cfg.theta_init.weights().end()),
      collapse_time_hist(cfg.horizon, 0),
      fixation_counts(cfg.support.size(), 0) {
    const std::size_t gens = horizon > 1 ? horizon - 1 : 0;
    value_hist.assign(gens * support_size() * (batch_size + 1), 0);
}

void EnsembleStats::record_value(std::uint32_t gen, std::size_t f, std::uint32_t count) {
    const std::size_t bins = batch_size + 1;
    value_hist[((gen - 1) * support_size() + f) * bins + count] += 1;
}

void EnsembleStats::record_collapse(std::uint32_t gen, std::uint32_t atom) {
    collapse_time_hist[gen] += 1;
    fixation_counts[atom] += 1;
}

void EnsembleStats::merge(const EnsembleStats& other) {
    n_runs += other.n_runs;
    for (std::size_t i = 0; i < value_hist.size(); ++i) value_hist[i] += other.value_hist[i];
    for (std::size_t i = 0; i < collapse_time_hist.size(); ++i)
        collapse_time_hist[i] += other.collapse_time_hist[i];
    for (std::size_t i = 0; i < fixation_counts.size(); ++i)
        fixation_counts[i] += other.fixation_counts[i];
}

std::span<const std::int64_t> EnsembleStats::hist(std::uint32_t gen, std::size_t f) const {
    const std::size_t bins = batch_size + 1;
    return {value_hist.data() + ((gen - 1) * support_size() + f) * bins, bins};
}

double EnsembleStats::raw_moment(std::uint32_t gen, std::size_t f, int order) const {
    if (gen == 0) return std::pow(mu0_weights[f], order);
    const auto h = hist(gen, f);
    double acc = 0.0;
    for (std::size_t j = 0; j < h.size(); ++j) {
        if (h[j] == 0) continue;
        const double x = static_cast<double>(j) / static_cast<double>(batch_size);
        acc += static_cast<double>(h[j]) * std::pow(x, order);
    }
    return acc / static_cast<double>(n_runs);
}

double EnsembleStats::mean(std::uint32_t gen, std::size_t f) const {
    return raw_moment(gen, f, 1);
}

double EnsembleStats::second_moment(std::uint32_t gen, std::size_t f) const {
    return raw_moment(gen, f, 2);
}

double EnsembleStats::variance(std::uint32_t gen, std::size_t f) const {
    if (gen == 0 || n_runs < 2) return 0.0;
    const double m1 = raw_moment(gen, f, 1);
    const double m2 = raw_moment(gen, f, 2);
    const double r = static_cast<double>(n_runs);
    const double v = (m2 - m1 * m1) * r / (r - 1.0);
    return v > 0.0 ? v : 0.0;
}

double EnsembleStats::mean_se(std::uint32_t gen, std::size_t f) const {
    if (gen == 0 || n_runs < 2) return 0.0;
    return std::sqrt(variance(gen, f) / static_cast<double>(n_runs));
}

double EnsembleStats::second_moment_se(std::uint32_t gen, std::size_t f) const {
    if (gen == 0 || n_runs < 2) return 0.0;
    const double m2 = raw_moment(gen, f, 2);
    const double m4 = raw_moment(gen, f, 4);
    const double r = static_cast<double>(n_runs);
    double v = (m4 - m2 * m2) * r / (r - 1.0);
    if (v < 0.0) v = 0.0;
    return std::sqrt(v / r);
}

std::int64_t EnsembleStats::collapsed_total() const {
    std::int64_t acc = 0;
    for (std::int64_t c : collapse_time_hist) acc += c;
    return acc;
}

std::int64_t EnsembleStats::collapsed_by(std::uint32_t gen) const {
    std::int64_t acc = 0;
    for (std::uint32_t g = 0; g < collapse_time_hist.size() && g <= gen; ++g)
        acc += collapse_time_hist[g];
    return acc;
}

TrajectoryRecord run_trajectory(const ExperimentConfig& cfg, std::uint64_t trajectory_index) {
    cfg.validate();
    TrajectoryRecord rec;
    rec.config_digest = config_digest(cfg);
    rec.master_seed = cfg.master_seed;
    rec.trajectory_index = trajectory_index;

    StepEngine engine(cfg);
    RngStream rng(cfg.master_seed, trajectory_index);
    ProbVector mu = cfg.source_law;
    ProbVector theta = cfg.theta_init;
    const bool can_absorb = cfg.fresh_prob == 0.0;

    for (std::uint32_t gen = 0; gen < cfg.horizon; ++gen) {
        if (gen > 0) engine.advance(mu, theta, rng);
        const std::uint32_t eff_support = engine.effective_support(mu, theta);
        const bool absorbed = can_absorb && eff_support == 1;
        rec.rows.push_back(TrajectoryRow{gen, mu, theta, eff_support, absorbed});
        if (absorbed) {
            rec.collapse_time = gen;
            break;
        }
    }
    return rec;
}

namespace {

// One trajectory folded into the integer accumulators. Absorbed runs are
// extended to the horizon with their frozen Dirac values, which is exactly
// the law of the absorbed chain.
void accumulate_trajectory(const ExperimentConfig& cfg, std::uint64_t index, StepEngine& engine,
                           ProbVector& mu, ProbVector& theta, EnsembleStats& acc) {
    RngStream rng(cfg.master_seed, index);
    mu = cfg.source_law;
    theta = cfg.theta_init;
    const bool can_absorb = cfg.fresh_prob == 0.0;
    const std::size_t k = cfg.support.size();

    for (std::uint32_t gen = 0; gen < cfg.horizon; ++gen) {
        if (gen > 0) {
            engine.advance(mu, theta, rng);
            for (std::size_t f = 0; f < k; ++f) acc.record_value(gen, f, engine.counts()[f]);
        }
        if (can_absorb && engine.effective_support(mu, theta) == 1) {
            const std::uint32_t atom = engine.effective_single_atom();
            acc.record_collapse(gen, atom);
            for (std::uint32_t g = gen + 1; g < cfg.horizon; ++g)
                for (std::size_t f = 0; f < k; ++f)
                    acc.record_value(g, f, f == atom ? cfg.batch_size : 0);
            break;
        }
    }
    acc.n_runs += 1;
}

}  // namespace

EnsembleStats run_ensemble(const ExperimentConfig& cfg, std::uint64_t n_runs,
                           unsigned parallelism) {
    cfg.validate();
    if (n_runs < 1) throw invalid_argument_error("run_ensemble: n_runs must be >= 1");

    const std::size_t hist_bytes = (cfg.horizon > 1 ? cfg.horizon - 1 : 0) *
                                   cfg.support.size() * (cfg.batch_size + 1) * sizeof(std::int64_t);
    if (hist_bytes > (std::size_t{1} << 30))
        throw resource_limit_error("run_ensemble: value histogram would need " +
                                   std::to_string(hist_bytes) + " bytes; reduce horizon, K or N");

    unsigned workers = parallelism == 0 ? 1 : parallelism;
    if (static_cast<std::uint64_t>(workers) > n_runs)
        workers = static_cast<unsigned>(n_runs);

    std::vector<EnsembleStats> partials(workers, EnsembleStats(cfg));
    std::atomic<std::uint64_t> next{0};

    auto work = [&](unsigned w) {
        StepEngine engine(cfg);
        ProbVector mu = cfg.source_law;
        ProbVector theta = cfg.theta_init;
        for (;;) {
            const std::uint64_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n_runs) break;
            accumulate_trajectory(cfg, i, engine, mu, theta, partials[w]);
        }
    };

    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }

    EnsembleStats total(cfg);
    for (const auto& p : partials) total.merge(p);
    return total;
}

}  // namespace collapsim
