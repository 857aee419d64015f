#pragma once

// Pair-sum kernel for the complex Kendall statistic
//
//     sum_{i<j} sgn(a_i - a_j) * conj(sgn(b_i - b_j)),   sgn(z) = z / |z|, sgn(0) = 0.
//
// Each pair term equals q / |q| with q = (a_i - a_j) conj(b_i - b_j). On x86-64
// CPUs with AVX-512F the inverse square root is computed as y0 = rsqrt14(p)
// followed by one third-order correction y = y0 (1 + e/2 + 3e^2/8 + 5e^3/16)
// with e = 1 - p y0^2. Since |e| < 2^-13 the truncation error is below 1e-16;
// otherwise a scalar loop is used.
// The two paths agree to rounding, not bit-for-bit.

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#define ROBUSTSC_HAVE_AVX512_KERNEL 1
#include <immintrin.h>
#endif

namespace robustsc::detail {

struct SoaComplex {
    std::span<const double> re;
    std::span<const double> im;
};

inline std::complex<double> kendall_pair_sum_scalar(SoaComplex a, SoaComplex b) {
    const std::size_t n = a.re.size();
    double sr = 0.0;
    double si = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ar = a.re[i], ai = a.im[i], br = b.re[i], bi = b.im[i];
        double rr = 0.0;
        double ri = 0.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dxr = ar - a.re[j];
            const double dxi = ai - a.im[j];
            const double dyr = br - b.re[j];
            const double dyi = bi - b.im[j];
            const double qr = dxr * dyr + dxi * dyi;
            const double qi = dxi * dyr - dxr * dyi;
            const double p = qr * qr + qi * qi;
            const double s = p > 0.0 ? 1.0 / std::sqrt(p) : 0.0;
            rr += qr * s;
            ri += qi * s;
        }
        sr += rr;
        si += ri;
    }
    return {sr, si};
}

#ifdef ROBUSTSC_HAVE_AVX512_KERNEL

__attribute__((target("avx512f,fma"))) inline std::complex<double> kendall_pair_sum_avx512(SoaComplex a,
                                                                                           SoaComplex b) {
    const std::size_t n = a.re.size();
    const double* pr = a.re.data();
    const double* pi = a.im.data();
    const double* qr_ = b.re.data();
    const double* qi_ = b.im.data();
    const __m512d one = _mm512_set1_pd(1.0);
    const __m512d c1 = _mm512_set1_pd(0.5);
    const __m512d c2 = _mm512_set1_pd(0.375);
    const __m512d c3 = _mm512_set1_pd(0.3125);
    const __m512d zero = _mm512_setzero_pd();

    double sr = 0.0;
    double si = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const __m512d xr = _mm512_set1_pd(pr[i]);
        const __m512d xi = _mm512_set1_pd(pi[i]);
        const __m512d yr = _mm512_set1_pd(qr_[i]);
        const __m512d yi = _mm512_set1_pd(qi_[i]);
        __m512d accr = zero;
        __m512d acci = zero;
        std::size_t j = i + 1;
        for (; j + 8 <= n; j += 8) {
            const __m512d dxr = _mm512_sub_pd(xr, _mm512_loadu_pd(pr + j));
            const __m512d dxi = _mm512_sub_pd(xi, _mm512_loadu_pd(pi + j));
            const __m512d dyr = _mm512_sub_pd(yr, _mm512_loadu_pd(qr_ + j));
            const __m512d dyi = _mm512_sub_pd(yi, _mm512_loadu_pd(qi_ + j));
            const __m512d re = _mm512_fmadd_pd(dxr, dyr, _mm512_mul_pd(dxi, dyi));
            const __m512d im = _mm512_fmsub_pd(dxi, dyr, _mm512_mul_pd(dxr, dyi));
            const __m512d p = _mm512_fmadd_pd(re, re, _mm512_mul_pd(im, im));
            const __mmask8 nonzero = _mm512_cmp_pd_mask(p, zero, _CMP_GT_OQ);
            const __m512d y0 = _mm512_rsqrt14_pd(p);
            const __m512d e = _mm512_fnmadd_pd(_mm512_mul_pd(p, y0), y0, one);
            __m512d poly = _mm512_fmadd_pd(c3, e, c2);
            poly = _mm512_fmadd_pd(poly, e, c1);
            poly = _mm512_mul_pd(poly, e);
            const __m512d y = _mm512_maskz_fmadd_pd(nonzero, y0, poly, y0);
            accr = _mm512_fmadd_pd(re, y, accr);
            acci = _mm512_fmadd_pd(im, y, acci);
        }
        double rr = _mm512_reduce_add_pd(accr);
        double ri = _mm512_reduce_add_pd(acci);
        for (; j < n; ++j) {
            const double dxr = pr[i] - pr[j];
            const double dxi = pi[i] - pi[j];
            const double dyr = qr_[i] - qr_[j];
            const double dyi = qi_[i] - qi_[j];
            const double re = dxr * dyr + dxi * dyi;
            const double im = dxi * dyr - dxr * dyi;
            const double p = re * re + im * im;
            if (p > 0.0) {
                const double s = 1.0 / std::sqrt(p);
                rr += re * s;
                ri += im * s;
            }
        }
        sr += rr;
        si += ri;
    }
    return {sr, si};
}

inline bool cpu_has_avx512() {
    static const bool has = __builtin_cpu_supports("avx512f") && __builtin_cpu_supports("fma");
    return has;
}

#endif

/// Inputs must be pre-scaled so that |a_i - a_j|^2 |b_i - b_j|^2 cannot overflow.
inline std::complex<double> kendall_pair_sum(SoaComplex a, SoaComplex b) {
#ifdef ROBUSTSC_HAVE_AVX512_KERNEL
    if (cpu_has_avx512()) return kendall_pair_sum_avx512(a, b);
#endif
    return kendall_pair_sum_scalar(a, b);
}

} // namespace robustsc::detail
