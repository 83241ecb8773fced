// SPDX-License-Identifier: Apache-2.0
//
// Reference kernels. Every SIMD variant is defined to agree with these:
// exactly for the elementwise/comparison kernels, to rounding for the
// reductions.

#include "collapsim/kernels.hpp"

namespace collapsim::kern::detail {

namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double sum_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double l1_diff_scalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - y[i];
        acc += d < 0.0 ? -d : d;
    }
    return acc;
}

void weighted_sum2_scalar(double w0, const double* x0, double w1, const double* x1, double* out,
                          std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = w0 * x0[i] + w1 * x1[i];
}

void weighted_sum3_scalar(double w0, const double* x0, double w1, const double* x1, double w2,
                          const double* x2, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = w0 * x0[i] + w1 * x1[i] + w2 * x2[i];
}

void axpy_scalar(double scale, const double* x, double* acc, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) acc[i] += scale * x[i];
}

void classify3_scalar(const double* u, double t1, double t2, std::uint8_t* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        out[i] = static_cast<std::uint8_t>((u[i] >= t1) + (u[i] >= t2));
}

void categorical_tagged_scalar(const double* cdfs3, std::size_t k, const std::uint8_t* tags,
                               const double* u, std::uint32_t* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* cdf = cdfs3 + static_cast<std::size_t>(tags[i]) * k;
        std::uint32_t idx = 0;
        for (std::size_t j = 0; j + 1 < k; ++j) idx += u[i] >= cdf[j];
        out[i] = idx;
    }
}

}  // namespace

const Ops scalar_ops = {
    dot_scalar,       sum_scalar,  l1_diff_scalar,   weighted_sum2_scalar,
    weighted_sum3_scalar, axpy_scalar, classify3_scalar, categorical_tagged_scalar,
};

}  // namespace collapsim::kern::detail
