// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <vector>

#include "collapsim/diagnostics.hpp"
#include "collapsim/dynamics.hpp"
#include "collapsim/errors.hpp"

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

std::vector<double> g_square_grid(std::uint32_t batch) {
    std::vector<double> g(batch + 1);
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double x = static_cast<double>(j) / batch;
        g[j] = x * x;
    }
    return g;
}

}  // namespace

TEST_SUITE("diagnostics") {

TEST_CASE("martingale residual: deterministic step gives an exact zero") {
    const auto cfg = make_cfg(0.0, 0.0, 1.0, 2, {0.5, 0.5}, 4, 600);
    const GenerationState st{0, ProbVector::dirac(0, 2), cfg.theta_init};
    RngStream rng(600, 0);
    const auto rep =
        martingale_residual(st, cfg, 1000, TestFunction::indicator(0, 2), rng);
    CHECK(rep.mean_residual == 0.0);
    CHECK(rep.standard_error == 0.0);
    CHECK(rep.replicas == 1000);
}

TEST_CASE("martingale residual: fresh-only batches center on mu0(f)") {
    const auto cfg = make_cfg(1.0, 0.3, 0.7, 4, {0.25, 0.75}, 4, 601);
    const GenerationState st{0, ProbVector::dirac(1, 2), ProbVector::dirac(0, 2)};
    RngStream rng(601, 0);
    const auto rep =
        martingale_residual(st, cfg, 20000, TestFunction::indicator(0, 2), rng);
    CHECK(std::abs(rep.mean_residual) <= 4.0 * rep.standard_error);
}

TEST_CASE("martingale residual: uniform K=2 N=2 state has SE near sqrt(1/8/R)") {
    const auto cfg = make_cfg(0.0, 0.0, 1.0, 2, {0.5, 0.5}, 4, 602);
    const GenerationState st{0, cfg.source_law, cfg.theta_init};
    RngStream rng(602, 0);
    const auto rep =
        martingale_residual(st, cfg, 100000, TestFunction::indicator(0, 2), rng);
    // one-step variance of the empirical mean is p(1-p)/N = 1/8
    CHECK(rep.standard_error == doctest::Approx(std::sqrt(0.125 / 100000)).epsilon(0.05));
    CHECK(std::abs(rep.mean_residual) <= 4.0 * rep.standard_error);
}

TEST_CASE("martingale residual: theta coordinate") {
    const auto cfg = make_cfg(0.0, 0.5, 0.5, 6, {0.2, 0.3, 0.5}, 4, 603);
    const GenerationState st{0, ProbVector({0.6, 0.3, 0.1}), ProbVector({0.1, 0.2, 0.7})};
    RngStream rng(603, 0);
    const auto rep = martingale_residual(st, cfg, 50000, TestFunction::indicator(2, 3), rng,
                                         ChainCoordinate::theta, 2);
    CHECK(std::abs(rep.mean_residual) <= 4.0 * rep.standard_error);

    // with b = 0 the theta coordinate never moves at all
    const auto cfg0 = make_cfg(0.0, 0.0, 1.0, 6, {0.2, 0.3, 0.5}, 4, 603);
    const auto rep0 = martingale_residual(st, cfg0, 1000, TestFunction::indicator(2, 3), rng,
                                          ChainCoordinate::theta, 2);
    CHECK(rep0.mean_residual == 0.0);
    CHECK(rep0.standard_error == 0.0);
}

TEST_CASE("martingale residual rejects tiny replica counts") {
    const auto cfg = make_cfg(0.0, 0.0, 1.0, 2, {0.5, 0.5}, 4, 604);
    const GenerationState st{0, cfg.source_law, cfg.theta_init};
    RngStream rng(604, 0);
    CHECK_THROWS_AS(martingale_residual(st, cfg, 99, TestFunction::indicator(0, 2), rng),
                    invalid_argument_error);
}

TEST_CASE("barycenter trajectory closed forms") {
    const auto f = TestFunction::indicator(0, 2);
    {
        const auto cfg = make_cfg(1.0, 0.0, 1.0, 2, {0.25, 0.75}, 4, 1);
        const auto t = barycenter_trajectory(cfg, f, 10);
        REQUIRE(t.size() == 11);
        for (std::size_t n = 1; n <= 10; ++n) CHECK(t[n] == doctest::Approx(0.25).epsilon(1e-15));
    }
    {
        const auto cfg = make_cfg(0.0, 0.5, 0.5, 2, {0.25, 0.75}, 4, 1, {0.75, 0.25});
        const auto t = barycenter_trajectory(cfg, f, 10);
        const double m0 = 0.5 * 0.75 + 0.5 * 0.25;
        for (std::size_t n = 0; n <= 10; ++n) CHECK(t[n] == doctest::Approx(m0).epsilon(1e-12));
    }
    {
        // mubar_0 = 0, mu0(f) = 1: the sequence 1 - 2^-n
        const auto cfg = make_cfg(0.5, 1.0, 0.0, 2, {1.0, 0.0}, 4, 1, {0.0, 1.0});
        const auto t = barycenter_trajectory(cfg, f, 10);
        for (std::size_t n = 0; n <= 10; ++n)
            CHECK(t[n] == doctest::Approx(1.0 - std::pow(2.0, -static_cast<double>(n)))
                              .epsilon(1e-12));
    }
}

TEST_CASE("barycenter_value matches barycenter_trajectory through ensemble echo") {
    const auto cfg = make_cfg(0.3, 0.4, 0.6, 3, {0.2, 0.3, 0.5}, 8, 605, {0.5, 0.25, 0.25});
    const auto stats = run_ensemble(cfg, 5, 1);
    const auto f = TestFunction::indicator(1, 3);
    const auto traj = barycenter_trajectory(cfg, f, cfg.horizon - 1);
    for (std::uint32_t n = 0; n < cfg.horizon; ++n)
        CHECK(barycenter_value(stats, 1, n) == doctest::Approx(traj[n]).epsilon(1e-14));
}

TEST_CASE("jensen gap: exact enumeration value at generation 1") {
    const auto cfg = make_cfg(0.0, 0.0, 1.0, 2, {0.5, 0.5}, 21, 606);
    const auto stats = run_ensemble(cfg, 30000, 2);
    const auto g = g_square_grid(2);

    const auto gen0 = jensen_gap(stats, 0, 0, g);
    CHECK(gen0.gap == 0.0);  // deterministic initial state
    CHECK(gen0.standard_error == 0.0);

    const auto gen1 = jensen_gap(stats, 1, 0, g);
    CHECK(std::abs(gen1.gap - 0.125) <= 0.01);  // E[mu_1(f)^2] - (1/2)^2 = 3/8 - 1/4
    CHECK(gen1.standard_error > 0.0);

    for (std::uint32_t n = 0; n < stats.horizon; ++n) {
        const auto gn = jensen_gap(stats, n, 0, g);
        CHECK(gn.gap >= -4.0 * gn.standard_error);
    }
}

TEST_CASE("jensen gap: identity g vanishes within noise") {
    const auto cfg = make_cfg(0.0, 0.0, 1.0, 4, {0.3, 0.7}, 8, 607);
    const auto stats = run_ensemble(cfg, 20000, 2);
    std::vector<double> identity = {0.0, 0.25, 0.5, 0.75, 1.0};
    for (std::uint32_t n = 1; n < stats.horizon; ++n) {
        const auto g = jensen_gap(stats, n, 0, identity);
        CHECK(std::abs(g.gap) <= 4.0 * g.standard_error);
    }
}

TEST_CASE("jensen gap argument checks") {
    const auto cfg = make_cfg(0.0, 0.0, 1.0, 2, {0.5, 0.5}, 4, 608);
    const auto stats = run_ensemble(cfg, 100, 1);
    CHECK_THROWS_AS(jensen_gap(stats, 9, 0, g_square_grid(2)), precondition_error);
    CHECK_THROWS_AS(jensen_gap(stats, 1, 0, g_square_grid(5)), invalid_argument_error);
}

TEST_CASE("second moments grow along the collapse martingale") {
    const auto cfg = make_cfg(0.0, 0.0, 1.0, 2, {0.5, 0.5}, 12, 609);
    const auto stats = run_ensemble(cfg, 30000, 2);

    // exact limit sequence 1/4, 3/8, 7/16 (chain-power values)
    CHECK(stats.second_moment(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
    const double se1 = stats.second_moment_se(1, 0);
    CHECK(std::abs(stats.second_moment(1, 0) - 0.375) <= 4.0 * se1);
    const double se2 = stats.second_moment_se(2, 0);
    CHECK(std::abs(stats.second_moment(2, 0) - 0.4375) <= 4.0 * se2);

    const auto violations = second_moment_monotone(stats, 0);
    REQUIRE(violations.size() == stats.horizon - 1);
    for (double v : violations) CHECK(v == 0.0);
}

TEST_CASE("second-moment monotonicity is restricted to the a = 0, b = 0 regime") {
    const auto cfg = make_cfg(0.3, 0.0, 1.0, 2, {0.5, 0.5}, 6, 610);
    const auto stats = run_ensemble(cfg, 200, 1);
    CHECK_THROWS_AS(second_moment_monotone(stats, 0), precondition_error);
}

TEST_CASE("second moments are constant from a Dirac start") {
    const auto cfg = make_cfg(0.0, 0.0, 1.0, 2, {1.0, 0.0}, 6, 611);
    const auto stats = run_ensemble(cfg, 500, 1);
    for (std::uint32_t n = 0; n < stats.horizon; ++n)
        CHECK(stats.second_moment(n, 0) == doctest::Approx(1.0).epsilon(1e-12));
    for (double v : second_moment_monotone(stats, 0)) CHECK(v == 0.0);
}

TEST_CASE("fixation histogram matches absorption probabilities") {
    {
        const auto cfg = make_cfg(0.0, 0.0, 1.0, 2, {1.0, 0.0}, 4, 612);
        const auto stats = run_ensemble(cfg, 100, 1);
        const auto fix = fixation_histogram(stats);
        CHECK(fix.uncollapsed == 0);
        CHECK(fix.frequencies[0] == 1.0);  // already Dirac
    }
    {
        const auto cfg = make_cfg(0.0, 0.0, 1.0, 5, {0.2, 0.3, 0.5}, 256, 613);
        const auto stats = run_ensemble(cfg, 20000, 2);
        const auto fix = fixation_histogram(stats);
        REQUIRE(fix.uncollapsed == 0);
        double total = 0.0;
        for (std::size_t atom = 0; atom < 3; ++atom) {
            const double p = stats.mu0_weights[atom];
            const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(fix.collapsed));
            CHECK(std::abs(fix.frequencies[atom] - p) <= 4.0 * se);
            total += fix.frequencies[atom];
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("fixation histogram flags partial results and wrong regimes") {
    const auto cfg = make_cfg(0.0, 0.0, 1.0, 8, {0.5, 0.5}, 2, 614);
    const auto stats = run_ensemble(cfg, 300, 1);
    const auto fix = fixation_histogram(stats);
    CHECK(fix.collapsed + fix.uncollapsed == 300);
    CHECK(fix.uncollapsed > 0);  // N = 8 rarely collapses in one step

    const auto cfg_a = make_cfg(0.2, 0.0, 1.0, 2, {0.5, 0.5}, 4, 615);
    const auto stats_a = run_ensemble(cfg_a, 50, 1);
    CHECK_THROWS_AS(fixation_histogram(stats_a), precondition_error);
}

TEST_CASE("ensemble means track the closed-form recursion (all channels active)") {
    const auto cfg = make_cfg(0.5, 0.3, 0.7, 10, {0.2, 0.3, 0.5}, 10, 616);
    const auto stats = run_ensemble(cfg, 5000, 2);
    for (std::uint32_t n = 0; n < stats.horizon; ++n) {
        for (std::size_t f = 0; f < 3; ++f) {
            const double closed = barycenter_value(stats, f, n);
            const double se = stats.mean_se(n, f);
            if (se == 0.0)
                CHECK(stats.mean(n, f) == doctest::Approx(closed).epsilon(1e-12));
            else
                CHECK(std::abs(stats.mean(n, f) - closed) <= 4.5 * se);
        }
    }
}

}  // TEST_SUITE
