// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "collapsim/dynamics.hpp"
#include "collapsim/measure.hpp"

namespace collapsim {

// Per-atom sample counts summing to N: the exact state space of the b = 0
// chain (mu_n = counts / N).
struct CountComposition {
    std::vector<std::uint32_t> counts;

    std::string label() const;  // "2|0|1"
    friend bool operator==(const CountComposition&, const CountComposition&) = default;
};

// Exact finite Markov chain over count compositions with multinomial rows
// next ~ Multinomial(N, a*mu0 + (1-a)*counts/N). Dense row-major matrix.
class OracleChain {
  public:
    OracleChain(std::vector<CountComposition> states, std::vector<double> transition,
                std::uint32_t batch_size, double fresh_prob, ProbVector source_law);

    std::size_t size() const noexcept { return states_.size(); }
    const std::vector<CountComposition>& states() const noexcept { return states_; }
    std::span<const double> row(std::size_t i) const {
        return {transition_.data() + i * states_.size(), states_.size()};
    }
    const std::vector<std::size_t>& absorbing() const noexcept { return absorbing_; }
    bool is_absorbing(std::size_t i) const noexcept { return absorbing_flag_[i] != 0; }
    std::size_t index_of(const CountComposition& c) const;  // throws invalid_argument_error

    std::uint32_t batch_size() const noexcept { return batch_size_; }
    double fresh_prob() const noexcept { return fresh_prob_; }
    const ProbVector& source_law() const noexcept { return source_law_; }

    // mu(f) of a state, i.e. dot(counts/N, f).
    double state_value(std::size_t i, const TestFunction& f) const;

  private:
    std::vector<CountComposition> states_;
    std::vector<double> transition_;
    std::uint32_t batch_size_;
    double fresh_prob_;
    ProbVector source_law_;
    std::vector<std::size_t> absorbing_;
    std::vector<char> absorbing_flag_;
    std::map<std::vector<std::uint32_t>, std::size_t> index_;
};

// Number of compositions C(N+K-1, K-1), saturating at 2^63-1.
std::uint64_t composition_count(std::uint32_t n, std::size_t k);

// All compositions of n over k atoms, first coordinate descending.
std::vector<CountComposition> enumerate_compositions(std::uint32_t n, std::size_t k);

// Builds the exact transition matrix; guarded at 2e5 compositions (and a
// dense-storage byte cap) via resource_limit_error.
OracleChain build_chain(std::uint32_t batch_size, const Support& s, double fresh_prob,
                        const ProbVector& mu0);

struct AbsorptionProbs {
    std::vector<std::size_t> absorbing;  // column order
    std::vector<double> probs;           // size() x absorbing.size() row-major
    std::size_t n_states = 0;

    std::span<const double> row(std::size_t i) const {
        return {probs.data() + i * absorbing.size(), absorbing.size()};
    }
};

// Fixation probabilities: solves (I - Q) B = R; absorbing rows are unit.
AbsorptionProbs absorption_probs(const OracleChain& chain);

// Expected generations to absorption per state ((I - Q) t = 1; zero at
// absorbing states).
std::vector<double> absorption_times(const OracleChain& chain);

struct StationaryResult {
    bool unique = true;
    // One distribution per closed communicating class (over all states,
    // zero off-class); the stationary set is their convex hull.
    std::vector<std::vector<double>> distributions;
    std::vector<ProbVector> barycenters;  // sum_state pi(state) * counts/N
    std::vector<std::vector<std::size_t>> closed_classes;
};

// Balance-equation solve per closed class; requires a > 0.
StationaryResult stationary_distribution(const OracleChain& chain);

// E[mu_n(f)] for n = 0..horizon from an explicit start state, by powers of
// the transition matrix.
std::vector<double> exact_mean_trajectory(const OracleChain& chain, std::size_t start,
                                          const TestFunction& f, std::uint32_t horizon);

// Same contract as diagnostics::barycenter_trajectory, computed on an
// independent route: chain powers when the b = 0 chain is buildable and mu0
// lies on the count grid, otherwise the iterated affine recursion.
std::vector<double> exact_mean_trajectory(const ExperimentConfig& cfg, const TestFunction& f,
                                          std::uint32_t horizon);

// Dense LU with partial pivoting (row-major), used by the solvers above.
class DenseLu {
  public:
    DenseLu(std::vector<double> a, std::size_t n);
    void solve(std::span<double> b) const;

  private:
    std::vector<double> lu_;
    std::vector<std::size_t> perm_;
    std::size_t n_;
};

}  // namespace collapsim
