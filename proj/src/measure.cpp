// SPDX-License-Identifier: Apache-2.0

#include "collapsim/measure.hpp"

#include <cmath>
#include <numeric>

#include "collapsim/errors.hpp"
#include "collapsim/kernels.hpp"

namespace collapsim {

namespace {

std::vector<std::string> default_labels(std::size_t k) {
    std::vector<std::string> labels;
    labels.reserve(k);
    for (std::size_t i = 0; i < k; ++i) labels.push_back("a" + std::to_string(i));
    return labels;
}

void check_same_size(std::size_t a, std::size_t b, const char* what) {
    if (a != b)
        throw invalid_argument_error(std::string(what) + ": support size mismatch (" +
                                     std::to_string(a) + " vs " + std::to_string(b) + ")");
}

}  // namespace

Support::Support(std::size_t size) : size_(size), labels_(default_labels(size)) {
    if (size == 0) throw invalid_argument_error("Support: size must be >= 1");
}

Support::Support(std::size_t size, std::vector<double> coords, std::vector<std::string> labels)
    : size_(size), coords_(std::move(coords)), labels_(std::move(labels)) {
    if (size == 0) throw invalid_argument_error("Support: size must be >= 1");
    if (!coords_.empty()) {
        if (coords_.size() != size)
            throw invalid_argument_error("Support: coords length must equal size");
        for (std::size_t i = 1; i < coords_.size(); ++i)
            if (!(coords_[i - 1] < coords_[i]))
                throw invalid_argument_error("Support: coords must be strictly increasing");
    }
    if (labels_.empty())
        labels_ = default_labels(size);
    else if (labels_.size() != size)
        throw invalid_argument_error("Support: labels length must equal size");
}

std::span<const double> Support::coords() const {
    if (coords_.empty()) throw unsupported_error("Support: no coordinates on this support");
    return coords_;
}

ProbVector::ProbVector(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty()) throw invalid_argument_error("ProbVector: empty weight vector");
    for (double w : weights_)
        if (!(w >= 0.0) || !std::isfinite(w))
            throw invalid_argument_error("ProbVector: weights must be finite and nonnegative");
    const double total = kern::sum(weights_);
    if (!(total > 0.0)) throw invalid_argument_error("ProbVector: weights sum to zero");
    for (double& w : weights_) w /= total;
}

ProbVector ProbVector::uniform(std::size_t k) {
    if (k == 0) throw invalid_argument_error("ProbVector: k must be >= 1");
    return ProbVector(std::vector<double>(k, 1.0 / static_cast<double>(k)), unchecked_tag{});
}

ProbVector ProbVector::dirac(std::size_t atom, std::size_t k) {
    if (k == 0 || atom >= k) throw invalid_argument_error("ProbVector: dirac atom out of range");
    std::vector<double> w(k, 0.0);
    w[atom] = 1.0;
    return ProbVector(std::move(w), unchecked_tag{});
}

ProbVector ProbVector::from_counts(std::span<const std::uint32_t> counts) {
    if (counts.empty()) throw invalid_argument_error("ProbVector: empty count vector");
    std::vector<double> w(counts.size());
    ProbVector p(std::move(w), unchecked_tag{});
    p.assign_from_counts(counts);
    return p;
}

void ProbVector::assign_from_counts(std::span<const std::uint32_t> counts) {
    std::uint64_t total = 0;
    for (std::uint32_t c : counts) total += c;
    if (total == 0) throw invalid_argument_error("ProbVector: counts sum to zero");
    weights_.resize(counts.size());
    const double inv = 1.0 / static_cast<double>(total);
    for (std::size_t i = 0; i < counts.size(); ++i)
        weights_[i] = static_cast<double>(counts[i]) * inv;
}

void ProbVector::assign_mix2(double w0, const ProbVector& x0, double w1, const ProbVector& x1) {
    weights_.resize(x0.size());
    kern::weighted_sum2(w0, x0.weights(), w1, x1.weights(), weights_);
}

std::size_t ProbVector::support_size() const noexcept {
    std::size_t n = 0;
    for (double w : weights_) n += w > 0.0;
    return n;
}

TestFunction::TestFunction(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw invalid_argument_error("TestFunction: empty value vector");
    for (double v : values_)
        if (!(v >= 0.0 && v <= 1.0))
            throw invalid_argument_error("TestFunction: values must lie in [0, 1]");
}

TestFunction TestFunction::indicator(std::size_t atom, std::size_t k) {
    if (k == 0 || atom >= k)
        throw invalid_argument_error("TestFunction: indicator atom out of range");
    std::vector<double> v(k, 0.0);
    v[atom] = 1.0;
    return TestFunction(std::move(v));
}

double integrate(const ProbVector& p, const TestFunction& f) {
    check_same_size(p.size(), f.size(), "integrate");
    const double r = kern::dot(p.weights(), f.values());
    return r < 0.0 ? 0.0 : (r > 1.0 ? 1.0 : r);
}

double tv_distance(const ProbVector& p, const ProbVector& q) {
    check_same_size(p.size(), q.size(), "tv_distance");
    return 0.5 * kern::l1_diff(p.weights(), q.weights());
}

double wasserstein1_1d(const ProbVector& p, const ProbVector& q, const Support& s) {
    check_same_size(p.size(), q.size(), "wasserstein1_1d");
    check_same_size(p.size(), s.size(), "wasserstein1_1d");
    const auto x = s.coords();  // throws unsupported_error when absent
    double acc = 0.0, cdf_gap = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        cdf_gap += p[i] - q[i];
        acc += std::abs(cdf_gap) * (x[i + 1] - x[i]);
    }
    return acc;
}

ProbVector mix(double a, const ProbVector& p, const ProbVector& q) {
    if (!(a >= 0.0 && a <= 1.0))
        throw invalid_argument_error("mix: weight must lie in [0, 1]");
    check_same_size(p.size(), q.size(), "mix");
    std::vector<double> out(p.size());
    kern::weighted_sum2(a, p.weights(), 1.0 - a, q.weights(), out);
    return ProbVector(std::move(out), ProbVector::unchecked_tag{});
}

ProbVector mix3_unchecked(double w0, const ProbVector& x0, double w1, const ProbVector& x1,
                          double w2, const ProbVector& x2) {
    std::vector<double> out(x0.size());
    kern::weighted_sum3(w0, x0.weights(), w1, x1.weights(), w2, x2.weights(), out);
    return ProbVector(std::move(out), ProbVector::unchecked_tag{});
}

ProbVector empirical_from_samples(std::span<const std::uint32_t> samples, const Support& s) {
    if (samples.empty()) throw invalid_argument_error("empirical_from_samples: empty batch");
    std::vector<std::uint32_t> counts(s.size(), 0);
    for (std::uint32_t idx : samples) {
        if (idx >= s.size())
            throw invalid_argument_error("empirical_from_samples: atom index out of range");
        ++counts[idx];
    }
    return ProbVector::from_counts(counts);
}

std::vector<TestFunction> make_cdc(const Support& s) {
    std::vector<TestFunction> fs;
    fs.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) fs.push_back(TestFunction::indicator(i, s.size()));
    return fs;
}

SupportStats support_stats(const ProbVector& p) {
    SupportStats st{0, 0.0, 0.0};
    for (double w : p.weights()) {
        if (w > 0.0) {
            ++st.support_size;
            st.entropy -= w * std::log(w);
        }
        if (w > st.max_atom) st.max_atom = w;
    }
    if (st.entropy < 0.0) st.entropy = 0.0;  // -0 guard
    return st;
}

}  // namespace collapsim
