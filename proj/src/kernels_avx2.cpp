// SPDX-License-Identifier: Apache-2.0
//
// AVX2 kernel variants. This TU is compiled with -mavx2 -ffp-contract=off
// and only ever entered through the dispatch table after a cpuid check.
// Elementwise kernels use mul+add (no FMA) so results match the scalar
// reference bit for bit; reductions use a single vector accumulator and a
// fixed horizontal-sum order.

#if defined(COLLAPSIM_HAVE_AVX2)

#include <immintrin.h>

#include "collapsim/kernels.hpp"

namespace collapsim::kern::detail {

namespace {

inline double hsum(__m256d v) {
    // lanes (v0+v2) + (v1+v3): fixed order, independent of input length
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(s) + _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    double r = hsum(acc);
    for (; i < n; ++i) r += x[i] * y[i];
    return r;
}

double sum_avx2(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double r = hsum(acc);
    for (; i < n; ++i) r += x[i];
    return r;
}

double l1_diff_avx2(const double* x, const double* y, std::size_t n) {
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        acc = _mm256_add_pd(acc, _mm256_andnot_pd(sign_mask, d));
    }
    double r = hsum(acc);
    for (; i < n; ++i) {
        const double d = x[i] - y[i];
        r += d < 0.0 ? -d : d;
    }
    return r;
}

void weighted_sum2_avx2(double w0, const double* x0, double w1, const double* x1, double* out,
                        std::size_t n) {
    const __m256d vw0 = _mm256_set1_pd(w0), vw1 = _mm256_set1_pd(w1);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d a = _mm256_mul_pd(vw0, _mm256_loadu_pd(x0 + i));
        const __m256d b = _mm256_mul_pd(vw1, _mm256_loadu_pd(x1 + i));
        _mm256_storeu_pd(out + i, _mm256_add_pd(a, b));
    }
    for (; i < n; ++i) out[i] = w0 * x0[i] + w1 * x1[i];
}

void weighted_sum3_avx2(double w0, const double* x0, double w1, const double* x1, double w2,
                        const double* x2, double* out, std::size_t n) {
    const __m256d vw0 = _mm256_set1_pd(w0), vw1 = _mm256_set1_pd(w1), vw2 = _mm256_set1_pd(w2);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d a = _mm256_mul_pd(vw0, _mm256_loadu_pd(x0 + i));
        const __m256d b = _mm256_mul_pd(vw1, _mm256_loadu_pd(x1 + i));
        const __m256d c = _mm256_mul_pd(vw2, _mm256_loadu_pd(x2 + i));
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_add_pd(a, b), c));
    }
    for (; i < n; ++i) out[i] = w0 * x0[i] + w1 * x1[i] + w2 * x2[i];
}

void axpy_avx2(double scale, const double* x, double* acc, std::size_t n) {
    const __m256d vs = _mm256_set1_pd(scale);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d t = _mm256_mul_pd(vs, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), t));
    }
    for (; i < n; ++i) acc[i] += scale * x[i];
}

void classify3_avx2(const double* u, double t1, double t2, std::uint8_t* out, std::size_t n) {
    const __m256d v1 = _mm256_set1_pd(t1), v2 = _mm256_set1_pd(t2);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vu = _mm256_loadu_pd(u + i);
        const __m256i ge1 = _mm256_castpd_si256(_mm256_cmp_pd(vu, v1, _CMP_GE_OQ));
        const __m256i ge2 = _mm256_castpd_si256(_mm256_cmp_pd(vu, v2, _CMP_GE_OQ));
        // each lane mask is 0 or -1; tag = -(ge1 + ge2)
        const __m256i t = _mm256_sub_epi64(_mm256_setzero_si256(), _mm256_add_epi64(ge1, ge2));
        alignas(32) std::int64_t lanes[4];
        _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), t);
        out[i + 0] = static_cast<std::uint8_t>(lanes[0]);
        out[i + 1] = static_cast<std::uint8_t>(lanes[1]);
        out[i + 2] = static_cast<std::uint8_t>(lanes[2]);
        out[i + 3] = static_cast<std::uint8_t>(lanes[3]);
    }
    for (; i < n; ++i) out[i] = static_cast<std::uint8_t>((u[i] >= t1) + (u[i] >= t2));
}

void categorical_tagged_avx2(const double* cdfs3, std::size_t k, const std::uint8_t* tags,
                             const double* u, std::uint32_t* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vu = _mm256_loadu_pd(u + i);
        const __m256i vt = _mm256_set_epi64x(tags[i + 3], tags[i + 2], tags[i + 1], tags[i + 0]);
        const __m256i is1 = _mm256_cmpeq_epi64(vt, _mm256_set1_epi64x(1));
        const __m256i is2 = _mm256_cmpeq_epi64(vt, _mm256_set1_epi64x(2));
        __m256i count = _mm256_setzero_si256();
        for (std::size_t j = 0; j + 1 < k; ++j) {
            const __m256d c0 = _mm256_set1_pd(cdfs3[j]);
            const __m256d c1 = _mm256_set1_pd(cdfs3[k + j]);
            const __m256d c2 = _mm256_set1_pd(cdfs3[2 * k + j]);
            __m256d c = _mm256_blendv_pd(c0, c1, _mm256_castsi256_pd(is1));
            c = _mm256_blendv_pd(c, c2, _mm256_castsi256_pd(is2));
            const __m256i ge = _mm256_castpd_si256(_mm256_cmp_pd(vu, c, _CMP_GE_OQ));
            count = _mm256_sub_epi64(count, ge);  // mask lanes are -1
        }
        alignas(32) std::int64_t lanes[4];
        _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), count);
        out[i + 0] = static_cast<std::uint32_t>(lanes[0]);
        out[i + 1] = static_cast<std::uint32_t>(lanes[1]);
        out[i + 2] = static_cast<std::uint32_t>(lanes[2]);
        out[i + 3] = static_cast<std::uint32_t>(lanes[3]);
    }
    for (; i < n; ++i) {
        const double* cdf = cdfs3 + static_cast<std::size_t>(tags[i]) * k;
        std::uint32_t idx = 0;
        for (std::size_t j = 0; j + 1 < k; ++j) idx += u[i] >= cdf[j];
        out[i] = idx;
    }
}

}  // namespace

const Ops avx2_ops = {
    dot_avx2,       sum_avx2,  l1_diff_avx2,   weighted_sum2_avx2,
    weighted_sum3_avx2, axpy_avx2, classify3_avx2, categorical_tagged_avx2,
};

}  // namespace collapsim::kern::detail

#endif  // COLLAPSIM_HAVE_AVX2
