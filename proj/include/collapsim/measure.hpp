// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace collapsim {

// A finite sample space of K atoms, optionally embedded on the real line
// (strictly increasing coordinates enable the 1-D Wasserstein metric).
class Support {
  public:
    explicit Support(std::size_t size);
    Support(std::size_t size, std::vector<double> coords, std::vector<std::string> labels = {});

    std::size_t size() const noexcept { return size_; }
    bool has_coords() const noexcept { return !coords_.empty(); }
    std::span<const double> coords() const;  // throws unsupported_error if absent
    const std::vector<std::string>& labels() const noexcept { return labels_; }

  private:
    std::size_t size_;
    std::vector<double> coords_;
    std::vector<std::string> labels_;
};

// Probability measure on a finite support: K nonnegative weights summing to
// one (renormalized on construction, tolerance 1e-12 thereafter).
class ProbVector {
  public:
    explicit ProbVector(std::vector<double> weights);

    static ProbVector uniform(std::size_t k);
    static ProbVector dirac(std::size_t atom, std::size_t k);
    // Exact counts/total construction; no renormalization error.
    static ProbVector from_counts(std::span<const std::uint32_t> counts);

    std::size_t size() const noexcept { return weights_.size(); }
    double operator[](std::size_t i) const noexcept { return weights_[i]; }
    std::span<const double> weights() const noexcept { return weights_; }

    std::size_t support_size() const noexcept;
    bool is_dirac() const noexcept { return support_size() == 1; }

    // In-place overwrites used by the hot trajectory loop; both preserve the
    // class invariant exactly.
    void assign_from_counts(std::span<const std::uint32_t> counts);
    void assign_mix2(double w0, const ProbVector& x0, double w1, const ProbVector& x1);

    friend bool operator==(const ProbVector&, const ProbVector&) = default;

  private:
    struct unchecked_tag {};
    ProbVector(std::vector<double> weights, unchecked_tag) : weights_(std::move(weights)) {}

    std::vector<double> weights_;

    friend ProbVector mix(double a, const ProbVector& p, const ProbVector& q);
    friend ProbVector mix3_unchecked(double w0, const ProbVector&, double w1, const ProbVector&,
                                     double w2, const ProbVector&);
};

// Bounded test function on the support: K values in [0, 1].
class TestFunction {
  public:
    explicit TestFunction(std::vector<double> values);
    static TestFunction indicator(std::size_t atom, std::size_t k);

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    std::span<const double> values() const noexcept { return values_; }

  private:
    std::vector<double> values_;
};

// mu(f) = sum_i p_i f_i, clamped to [0, 1].
double integrate(const ProbVector& p, const TestFunction& f);

// (1/2) sum_i |p_i - q_i|.
double tv_distance(const ProbVector& p, const ProbVector& q);

// 1-D Wasserstein-1 via CDF differences; requires coordinates.
double wasserstein1_1d(const ProbVector& p, const ProbVector& q, const Support& s);

// a*p + (1-a)*q.
ProbVector mix(double a, const ProbVector& p, const ProbVector& q);

// w0*x0 + w1*x1 + w2*x2 for weights already summing to one (internal).
ProbVector mix3_unchecked(double w0, const ProbVector& x0, double w1, const ProbVector& x1,
                          double w2, const ProbVector& x2);

// Empirical distribution of a nonempty batch of atom indices.
ProbVector empirical_from_samples(std::span<const std::uint32_t> samples, const Support& s);

// Convergence-determining class: the K singleton indicators.
std::vector<TestFunction> make_cdc(const Support& s);

struct SupportStats {
    std::size_t support_size;
    double max_atom;
    double entropy;  // natural log, 0*ln(0) = 0
};
SupportStats support_stats(const ProbVector& p);

}  // namespace collapsim
