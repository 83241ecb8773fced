// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <vector>

#include "collapsim/dynamics.hpp"
#include "collapsim/errors.hpp"
#include "collapsim/kernels.hpp"
#include "collapsim/measure.hpp"

using namespace collapsim;

namespace {

ExperimentConfig make_cfg(double a, double b, double c, std::uint32_t batch,
                          std::vector<double> mu0, std::uint32_t horizon, std::uint64_t seed,
                          std::vector<double> theta0 = {}) {
    ExperimentConfig cfg;
    cfg.fresh_prob = a;
    cfg.parametric_weight = b;
    cfg.empirical_weight = c;
    cfg.batch_size = batch;
    cfg.support = Support(mu0.size());
    cfg.source_law = ProbVector(mu0);
    cfg.theta_init = theta0.empty() ? cfg.source_law : ProbVector(theta0);
    cfg.horizon = horizon;
    cfg.master_seed = seed;
    cfg.validate();
    return cfg;
}

bool rows_identical(const TrajectoryRecord& a, const TrajectoryRecord& b) {
    if (a.rows.size() != b.rows.size() || a.collapse_time != b.collapse_time) return false;
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        const auto& x = a.rows[i];
        const auto& y = b.rows[i];
        if (x.n != y.n || !(x.mu == y.mu) || !(x.theta == y.theta) ||
            x.effective_support_size != y.effective_support_size || x.collapsed != y.collapsed)
            return false;
    }
    return true;
}

}  // namespace

TEST_SUITE("dynamics") {

TEST_CASE("config validation names the violated constraint") {
    auto cfg = make_cfg(0.5, 0.0, 1.0, 2, {0.5, 0.5}, 10, 1);
    cfg.empirical_weight = 0.9;
    CHECK_THROWS_WITH_AS(cfg.validate(),
                         doctest::Contains("b + c must equal 1"), invalid_argument_error);
    cfg = make_cfg(0.5, 0.0, 1.0, 2, {0.5, 0.5}, 10, 1);
    cfg.fresh_prob = 1.5;
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("a must lie in [0, 1]"),
                         invalid_argument_error);
    cfg = make_cfg(0.5, 0.0, 1.0, 2, {0.5, 0.5}, 10, 1);
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), invalid_argument_error);
    cfg = make_cfg(0.5, 0.0, 1.0, 2, {0.5, 0.5}, 10, 1);
    cfg.theta_init = ProbVector::uniform(3);
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("theta0"), invalid_argument_error);
}

TEST_CASE("effective sampling measure") {
    const auto cfg_full = make_cfg(1.0, 0.3, 0.7, 2, {0.25, 0.75}, 10, 1);
    const GenerationState st{0, ProbVector::dirac(0, 2), ProbVector::dirac(1, 2)};
    const auto eff_full = effective_sampling_measure(st, cfg_full);
    CHECK(eff_full[0] == doctest::Approx(0.25).epsilon(1e-15));  // a = 1: mu0 regardless of state

    const auto cfg_emp = make_cfg(0.0, 0.0, 1.0, 2, {0.25, 0.75}, 10, 1);
    const auto eff_emp = effective_sampling_measure(st, cfg_emp);
    CHECK(eff_emp[0] == 1.0);  // pure empirical recursion returns mu

    const auto cfg_mix = make_cfg(0.5, 0.0, 1.0, 2, {1.0, 0.0}, 10, 1);
    const GenerationState st2{0, ProbVector::dirac(1, 2), ProbVector::uniform(2)};
    const auto eff_mix = effective_sampling_measure(st2, cfg_mix);
    CHECK(eff_mix[0] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("fit_theta") {
    const auto theta = ProbVector({0.5, 0.5});
    CHECK(fit_theta({}, theta) == theta);  // no-information fallback

    const std::vector<std::uint32_t> both_zero = {0, 0};
    const auto fitted = fit_theta(both_zero, theta);
    CHECK(fitted[0] == 1.0);

    const std::vector<std::uint32_t> bad = {0, 9};
    CHECK_THROWS_AS(fit_theta(bad, theta), invalid_argument_error);

    // E[fit_theta | theta] = theta: Monte Carlo over draws from theta itself
    RngStream rng(404, 0);
    const std::uint64_t replicas = 100000;
    const std::uint32_t m = 2;
    double acc = 0.0;
    std::vector<std::uint32_t> batch(m);
    for (std::uint64_t r = 0; r < replicas; ++r) {
        for (auto& x : batch) x = rng.next_u01() < 0.5 ? 0u : 1u;
        acc += fit_theta(batch, theta)[0];
    }
    const double se = std::sqrt(0.5 * 0.5 / m / static_cast<double>(replicas));
    CHECK(std::abs(acc / static_cast<double>(replicas) - 0.5) <= 4.0 * se);
}

TEST_CASE("step preconditions and absorbing fixed point") {
    const auto cfg_short = make_cfg(0.0, 0.0, 1.0, 2, {0.5, 0.5}, 5, 7);
    RngStream rng(7, 0);
    GenerationState at_horizon{5, cfg_short.source_law, cfg_short.theta_init};
    CHECK_THROWS_AS(step(at_horizon, cfg_short, rng), precondition_error);

    const auto cfg = make_cfg(0.0, 0.0, 1.0, 2, {0.5, 0.5}, 200, 7);
    GenerationState dirac{0, ProbVector::dirac(1, 2), cfg.theta_init};
    auto state = dirac;
    for (int i = 0; i < 100; ++i) {
        auto [next, batch] = step(state, cfg, rng);
        CHECK(next.mu == dirac.mu);  // exact, not statistical
        for (auto s : batch.samples) CHECK(s == 1);
        state = std::move(next);
    }
    CHECK(state.n == 100);
}

TEST_CASE("batch record tags follow the regime") {
    RngStream rng(11, 0);
    {
        const auto cfg = make_cfg(1.0, 0.5, 0.5, 8, {0.5, 0.5}, 5, 1);
        const GenerationState st{0, cfg.source_law, cfg.theta_init};
        auto [next, batch] = step(st, cfg, rng);
        REQUIRE(batch.samples.size() == 8);
        REQUIRE(batch.source_tags.size() == 8);
        for (auto t : batch.source_tags) CHECK(t == SourceTag::fresh);
        CHECK(next.theta == st.theta);  // empty parametric sub-batch keeps theta
    }
    {
        const auto cfg = make_cfg(0.0, 0.0, 1.0, 8, {0.5, 0.5}, 5, 1);
        const GenerationState st{0, cfg.source_law, cfg.theta_init};
        auto [next, batch] = step(st, cfg, rng);
        for (auto t : batch.source_tags) CHECK(t == SourceTag::empirical);
    }
    {
        const auto cfg = make_cfg(0.0, 1.0, 0.0, 8, {0.25, 0.75}, 5, 1, {0.75, 0.25});
        const GenerationState st{0, cfg.source_law, cfg.theta_init};
        auto [next, batch] = step(st, cfg, rng);
        for (auto t : batch.source_tags) CHECK(t == SourceTag::parametric);
        // nu = b*theta + c*mu = theta here
        CHECK(batch.nu == st.theta);
    }
}

TEST_CASE("one-step law from the uniform K=2 N=2 state") {
    // exact law of mu' from (1/2,1/2) under pure resampling: 1/4, 1/2, 1/4
    const auto cfg = make_cfg(0.0, 0.0, 1.0, 2, {0.5, 0.5}, 5, 13);
    const GenerationState st{0, cfg.source_law, cfg.theta_init};
    RngStream rng(13, 0);
    const std::uint64_t replicas = 20000;
    std::uint64_t counts[3] = {0, 0, 0};
    StepEngine engine(cfg);
    ProbVector mu = st.mu;
    ProbVector theta = st.theta;
    for (std::uint64_t r = 0; r < replicas; ++r) {
        mu = st.mu;
        theta = st.theta;
        engine.advance(mu, theta, rng);
        counts[engine.counts()[0]] += 1;
    }
    const double expected[3] = {0.25, 0.5, 0.25};  // counts0 = 0, 1, 2
    for (int j = 0; j < 3; ++j) {
        const double freq = static_cast<double>(counts[j]) / static_cast<double>(replicas);
        const double se = std::sqrt(expected[j] * (1 - expected[j]) / replicas);
        CHECK(std::abs(freq - expected[j]) <= 4.0 * se);
    }
}

TEST_CASE("one-step conditional mean matches the effective measure in all regimes") {
    struct Regime {
        double a, b;
    };
    const Regime regimes[] = {{0.4, 0.3}, {0.0, 0.6}, {0.0, 0.0}};
    int stream = 0;
    for (const auto rg : regimes) {
        const auto cfg = make_cfg(rg.a, rg.b, 1.0 - rg.b, 6, {0.2, 0.3, 0.5}, 5, 17);
        const GenerationState st{0, ProbVector({0.6, 0.3, 0.1}), ProbVector({0.1, 0.1, 0.8})};
        const auto eff = effective_sampling_measure(st, cfg);
        RngStream rng(17, static_cast<std::uint64_t>(stream++));
        StepEngine engine(cfg);
        ProbVector mu = st.mu;
        ProbVector theta = st.theta;
        const std::uint64_t replicas = 20000;
        double acc_mu = 0.0, acc_mu2 = 0.0, acc_th = 0.0, acc_th2 = 0.0;
        for (std::uint64_t r = 0; r < replicas; ++r) {
            mu = st.mu;
            theta = st.theta;
            engine.advance(mu, theta, rng);
            acc_mu += mu[0];
            acc_mu2 += mu[0] * mu[0];
            acc_th += theta[0];
            acc_th2 += theta[0] * theta[0];
        }
        const double n = static_cast<double>(replicas);
        const double mean_mu = acc_mu / n;
        const double se_mu = std::sqrt((acc_mu2 / n - mean_mu * mean_mu) / n);
        CHECK(std::abs(mean_mu - eff[0]) <= 4.0 * se_mu);

        const double mean_th = acc_th / n;
        const double var_th = acc_th2 / n - mean_th * mean_th;
        if (var_th > 0.0) {
            CHECK(std::abs(mean_th - st.theta[0]) <= 4.0 * std::sqrt(var_th / n));
        } else {
            CHECK(mean_th == st.theta[0]);  // b = 0: theta never moves
        }
    }
}

TEST_CASE("step consumption contract is frozen") {
    // Stream (42, 0) starts 0.93694, 0.45374, 0.89847, 0.22906 (pinned in the
    // rng suite). With N = 2 the first two are tag coins (thresholds 0.3 and
    // 0.475 here), the next two atom coins, so the batch must come out as
    // sample 0: empirical law (0.25, 0.75) -> atom 1,
    // sample 1: parametric law (0.8, 0.2)  -> atom 0.
    const auto cfg = make_cfg(0.3, 0.25, 0.75, 2, {0.5, 0.5}, 4, 42);
    const GenerationState st{0, ProbVector({0.25, 0.75}), ProbVector({0.8, 0.2})};
    RngStream rng(42, 0);
    const auto [next, batch] = step(st, cfg, rng);

    REQUIRE(batch.samples.size() == 2);
    CHECK(batch.source_tags[0] == SourceTag::empirical);
    CHECK(batch.source_tags[1] == SourceTag::parametric);
    CHECK(batch.samples[0] == 1);
    CHECK(batch.samples[1] == 0);
    CHECK(next.mu == ProbVector({0.5, 0.5}));
    CHECK(next.theta == ProbVector::dirac(0, 2));  // fitted from the sub-batch [0]
    CHECK(batch.nu[0] == doctest::Approx(0.3875).epsilon(1e-15));
    CHECK(next.n == 1);
}

TEST_CASE("is_absorbed") {
    const auto cfg00 = make_cfg(0.0, 0.0, 1.0, 2, {0.5, 0.5}, 5, 1);
    CHECK(is_absorbed({0, ProbVector::dirac(0, 2), cfg00.theta_init}, cfg00));
    CHECK_FALSE(is_absorbed({0, cfg00.source_law, cfg00.theta_init}, cfg00));

    const auto cfg_a = make_cfg(0.3, 0.0, 1.0, 2, {0.5, 0.5}, 5, 1);
    CHECK_FALSE(is_absorbed({0, ProbVector::dirac(0, 2), cfg_a.theta_init}, cfg_a));

    const auto cfg_bc = make_cfg(0.0, 0.5, 0.5, 2, {0.5, 0.5}, 5, 1);
    CHECK_FALSE(
        is_absorbed({0, ProbVector::dirac(0, 2), ProbVector::dirac(1, 2)}, cfg_bc));
    CHECK(is_absorbed({0, ProbVector::dirac(1, 2), ProbVector::dirac(1, 2)}, cfg_bc));
}

TEST_CASE("run_trajectory rows and collapse bookkeeping") {
    {
        const auto cfg = make_cfg(0.0, 0.0, 1.0, 2, {1.0, 0.0}, 10, 3);
        const auto rec = run_trajectory(cfg, 0);
        REQUIRE(rec.collapse_time.has_value());
        CHECK(*rec.collapse_time == 0);  // starts absorbed
        CHECK(rec.rows.size() == 1);
        CHECK(rec.rows[0].collapsed);
    }
    {
        const auto cfg = make_cfg(0.3, 0.0, 1.0, 2, {0.5, 0.5}, 100, 3);
        const auto rec = run_trajectory(cfg, 1);
        CHECK_FALSE(rec.collapse_time.has_value());
        REQUIRE(rec.rows.size() == 100);
        for (std::size_t i = 0; i < rec.rows.size(); ++i) {
            CHECK(rec.rows[i].n == i);
            CHECK_FALSE(rec.rows[i].collapsed);
            if (i >= 1) {
                // empirical states live exactly on the count grid
                for (double w : rec.rows[i].mu.weights()) {
                    const double scaled = w * 2.0;
                    CHECK(scaled == std::floor(scaled));
                }
            }
        }
        CHECK_FALSE(rec.config_digest.empty());
    }
}

TEST_CASE("trajectories are bit-identical across kernel backends") {
    // the step path uses only comparison and elementwise kernels, so the
    // AVX2 lane must reproduce the scalar reference exactly
    if (!kern::backend_supported(kern::Backend::avx2)) return;
    const auto saved = kern::active_backend();
    const auto cfg = make_cfg(0.25, 0.4, 0.6, 7, {0.1, 0.2, 0.3, 0.25, 0.15}, 200, 2718);

    REQUIRE(kern::set_backend(kern::Backend::scalar));
    const auto scalar_rec = run_trajectory(cfg, 0);
    const auto scalar_stats = run_ensemble(cfg, 50, 2);

    REQUIRE(kern::set_backend(kern::Backend::avx2));
    const auto avx2_rec = run_trajectory(cfg, 0);
    const auto avx2_stats = run_ensemble(cfg, 50, 2);

    kern::set_backend(saved);
    CHECK(rows_identical(scalar_rec, avx2_rec));
    CHECK(scalar_stats.value_hist == avx2_stats.value_hist);
    CHECK(scalar_stats.collapse_time_hist == avx2_stats.collapse_time_hist);
}

TEST_CASE("trajectories are bit-deterministic in (config, seed, index)") {
    const auto cfg = make_cfg(0.1, 0.4, 0.6, 5, {0.2, 0.3, 0.5}, 50, 99);
    const auto a = run_trajectory(cfg, 3);
    const auto b = run_trajectory(cfg, 3);
    CHECK(rows_identical(a, b));
    const auto c = run_trajectory(cfg, 4);
    CHECK_FALSE(rows_identical(a, c));
}

TEST_CASE("ensemble: singleton run equals the trajectory") {
    const auto cfg = make_cfg(0.2, 0.3, 0.7, 4, {0.3, 0.7}, 20, 55);
    const auto rec = run_trajectory(cfg, 0);
    const auto stats = run_ensemble(cfg, 1);
    REQUIRE(stats.n_runs == 1);
    for (std::uint32_t n = 0; n < 20; ++n) {
        for (std::size_t f = 0; f < 2; ++f) {
            CHECK(stats.mean(n, f) == doctest::Approx(rec.rows[n].mu[f]).epsilon(1e-15));
            CHECK(stats.variance(n, f) == 0.0);
        }
    }
}

TEST_CASE("ensemble accumulators are identical for any parallelism") {
    const auto cfg = make_cfg(0.0, 0.0, 1.0, 2, {0.5, 0.5}, 32, 77);
    const auto s1 = run_ensemble(cfg, 500, 1);
    const auto s3 = run_ensemble(cfg, 500, 3);
    CHECK(s1.value_hist == s3.value_hist);
    CHECK(s1.collapse_time_hist == s3.collapse_time_hist);
    CHECK(s1.fixation_counts == s3.fixation_counts);
    CHECK(s1.n_runs == s3.n_runs);
}

TEST_CASE("ensemble invariants: histogram mass and moment consistency") {
    const auto cfg = make_cfg(0.0, 0.0, 1.0, 2, {0.5, 0.5}, 16, 88);
    const auto stats = run_ensemble(cfg, 2000, 2);
    for (std::uint32_t n = 1; n < stats.horizon; ++n) {
        for (std::size_t f = 0; f < 2; ++f) {
            std::int64_t mass = 0;
            for (auto c : stats.hist(n, f)) mass += c;
            CHECK(mass == 2000);
            const double mean = stats.mean(n, f);
            CHECK(stats.second_moment(n, f) >= mean * mean - 1e-9);
        }
    }
    CHECK(stats.collapsed_total() + stats.uncollapsed() == 2000);

    // mean collapse time near the oracle value 2.0 (per-run std is sqrt(2))
    double mean_t = 0.0;
    for (std::size_t n = 0; n < stats.collapse_time_hist.size(); ++n)
        mean_t += static_cast<double>(n) * static_cast<double>(stats.collapse_time_hist[n]);
    mean_t /= static_cast<double>(stats.collapsed_total());
    CHECK(std::abs(mean_t - 2.0) <= 4.0 * std::sqrt(2.0 / 2000.0));

    // fixation splits evenly from the uniform start
    const double frac0 = static_cast<double>(stats.fixation_counts[0]) /
                         static_cast<double>(stats.collapsed_total());
    CHECK(std::abs(frac0 - 0.5) <= 4.0 * std::sqrt(0.25 / 2000.0));
}

TEST_CASE("persistent excitation never absorbs") {
    const auto cfg = make_cfg(0.2, 0.0, 1.0, 4, {0.5, 0.5}, 64, 66);
    const auto stats = run_ensemble(cfg, 500, 2);
    CHECK(stats.collapsed_total() == 0);
    CHECK(stats.uncollapsed() == 500);
}

TEST_CASE("ensemble guards") {
    const auto cfg = make_cfg(0.2, 0.0, 1.0, 4, {0.5, 0.5}, 16, 1);
    CHECK_THROWS_AS(run_ensemble(cfg, 0), invalid_argument_error);
    auto big = make_cfg(0.2, 0.0, 1.0, 10, {0.5, 0.5}, 1, 1);
    big.horizon = 0x0fffffff;
    CHECK_THROWS_AS(run_ensemble(big, 1), resource_limit_error);
}

}  // TEST_SUITE
