// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "collapsim/kernels.hpp"

namespace collapsim::kern {

namespace {

bool cpu_has_avx2() noexcept {
#if defined(COLLAPSIM_HAVE_AVX2)
    return __builtin_cpu_supports("avx2") != 0;
#else
    return false;
#endif
}

Backend env_backend() noexcept {
    const char* v = std::getenv("COLLAPSIM_KERNELS");
    if (v != nullptr) {
        if (std::strcmp(v, "scalar") == 0) return Backend::scalar;
        if (std::strcmp(v, "avx2") == 0 && cpu_has_avx2()) return Backend::avx2;
        // "auto", unknown values, or unsupported requests fall through
    }
    return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

std::atomic<Backend> g_backend{env_backend()};

const detail::Ops& ops_for(Backend b) noexcept {
#if defined(COLLAPSIM_HAVE_AVX2)
    if (b == Backend::avx2) return detail::avx2_ops;
#endif
    (void)b;
    return detail::scalar_ops;
}

const detail::Ops& ops() noexcept { return ops_for(g_backend.load(std::memory_order_relaxed)); }

}  // namespace

const char* backend_name(Backend b) noexcept {
    return b == Backend::avx2 ? "avx2" : "scalar";
}

bool backend_supported(Backend b) noexcept {
    return b == Backend::scalar || (b == Backend::avx2 && cpu_has_avx2());
}

Backend active_backend() noexcept { return g_backend.load(std::memory_order_relaxed); }

bool set_backend(Backend b) noexcept {
    if (!backend_supported(b)) return false;
    g_backend.store(b, std::memory_order_relaxed);
    return true;
}

double dot(std::span<const double> x, std::span<const double> y) noexcept {
    return ops().dot(x.data(), y.data(), x.size());
}

double sum(std::span<const double> x) noexcept { return ops().sum(x.data(), x.size()); }

double l1_diff(std::span<const double> x, std::span<const double> y) noexcept {
    return ops().l1_diff(x.data(), y.data(), x.size());
}

void weighted_sum2(double w0, std::span<const double> x0, double w1, std::span<const double> x1,
                   std::span<double> out) noexcept {
    ops().weighted_sum2(w0, x0.data(), w1, x1.data(), out.data(), out.size());
}

void weighted_sum3(double w0, std::span<const double> x0, double w1, std::span<const double> x1,
                   double w2, std::span<const double> x2, std::span<double> out) noexcept {
    ops().weighted_sum3(w0, x0.data(), w1, x1.data(), w2, x2.data(), out.data(), out.size());
}

void axpy(double scale, std::span<const double> x, std::span<double> acc) noexcept {
    ops().axpy(scale, x.data(), acc.data(), acc.size());
}

void classify3(std::span<const double> u, double t1, double t2,
               std::span<std::uint8_t> out) noexcept {
    ops().classify3(u.data(), t1, t2, out.data(), u.size());
}

void categorical_tagged(const double* cdfs3, std::size_t k, std::span<const std::uint8_t> tags,
                        std::span<const double> u, std::span<std::uint32_t> out) noexcept {
    ops().categorical_tagged(cdfs3, k, tags.data(), u.data(), out.data(), u.size());
}

}  // namespace collapsim::kern
