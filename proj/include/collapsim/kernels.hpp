// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

// Arithmetic inner loops of the simulator and oracle: scalar reference
// kernels plus AVX2 variants selected at runtime. The elementwise and
// comparison kernels (weighted sums, axpy, classify3, categorical_tagged)
// are bit-identical across backends: no FMA contraction, no reassociation
// per output element. The reductions (dot, sum, l1_diff) may reassociate in
// the vector path and are equivalence-tested against a long-double
// reference instead.
namespace collapsim::kern {

enum class Backend { scalar, avx2 };

const char* backend_name(Backend b) noexcept;
bool backend_supported(Backend b) noexcept;

// Active backend. Resolution order: explicit set_backend() call, else the
// COLLAPSIM_KERNELS environment variable ("scalar", "avx2", "auto"), else
// the widest supported instruction set.
Backend active_backend() noexcept;

// Force a backend; returns false (and leaves the selection alone) if the
// backend is not supported on this CPU.
bool set_backend(Backend b) noexcept;

// --- reductions ---------------------------------------------------------
double dot(std::span<const double> x, std::span<const double> y) noexcept;
double sum(std::span<const double> x) noexcept;
double l1_diff(std::span<const double> x, std::span<const double> y) noexcept;

// --- elementwise maps (bit-identical across backends) -------------------
// out[i] = w0*x0[i] + w1*x1[i]
void weighted_sum2(double w0, std::span<const double> x0,
                   double w1, std::span<const double> x1,
                   std::span<double> out) noexcept;
// out[i] = w0*x0[i] + w1*x1[i] + w2*x2[i]
void weighted_sum3(double w0, std::span<const double> x0,
                   double w1, std::span<const double> x1,
                   double w2, std::span<const double> x2,
                   std::span<double> out) noexcept;
// acc[i] += scale * x[i]
void axpy(double scale, std::span<const double> x, std::span<double> acc) noexcept;

// --- batch sampling primitives (bit-identical across backends) ----------
// Three-way threshold classification: out[i] = (u[i] >= t1) + (u[i] >= t2).
// Requires t1 <= t2; results are 0, 1 or 2.
void classify3(std::span<const double> u, double t1, double t2,
               std::span<std::uint8_t> out) noexcept;

// Inverse-CDF categorical draw against one of three tabulated CDFs per
// element. cdfs3 is row-major 3 x k of inclusive prefix sums (cdf[k-1] ~ 1);
// out[i] = #{ j < k-1 : u[i] >= cdfs3[tag[i]*k + j] }, always in [0, k).
void categorical_tagged(const double* cdfs3, std::size_t k,
                        std::span<const std::uint8_t> tags,
                        std::span<const double> u,
                        std::span<std::uint32_t> out) noexcept;

namespace detail {

struct Ops {
    double (*dot)(const double*, const double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    double (*l1_diff)(const double*, const double*, std::size_t);
    void (*weighted_sum2)(double, const double*, double, const double*, double*, std::size_t);
    void (*weighted_sum3)(double, const double*, double, const double*, double, const double*,
                          double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*classify3)(const double*, double, double, std::uint8_t*, std::size_t);
    void (*categorical_tagged)(const double*, std::size_t, const std::uint8_t*, const double*,
                               std::uint32_t*, std::size_t);
};

extern const Ops scalar_ops;
#if defined(COLLAPSIM_HAVE_AVX2)
extern const Ops avx2_ops;
#endif

}  // namespace detail

}  // namespace collapsim::kern
