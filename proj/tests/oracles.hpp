#pragma once

// Independent reference implementations used by the tests. They follow the
// textbook definitions as literally as possible and make no attempt to be
// fast; none of them call into the library.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

namespace oracle {

using cd = std::complex<double>;

inline double cov(const std::vector<double>& a, const std::vector<double>& b) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
    return static_cast<double>(s / a.size());
}

inline cd cov(const std::vector<cd>& a, const std::vector<cd>& b) {
    long double re = 0.0L, im = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) {
        // a * conj(b) written out component-wise
        re += static_cast<long double>(a[i].real()) * b[i].real() + static_cast<long double>(a[i].imag()) * b[i].imag();
        im += static_cast<long double>(a[i].imag()) * b[i].real() - static_cast<long double>(a[i].real()) * b[i].imag();
    }
    return {static_cast<double>(re / a.size()), static_cast<double>(im / a.size())};
}

inline double corr(const std::vector<double>& a, const std::vector<double>& b) {
    long double saa = 0.0L, sbb = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) {
        saa += static_cast<long double>(a[i]) * a[i];
        sbb += static_cast<long double>(b[i]) * b[i];
    }
    return cov(a, b) / std::sqrt(static_cast<double>(saa / a.size()) * static_cast<double>(sbb / a.size()));
}

/// Sort-and-filter trimming: drop the g smallest and g largest products by
/// position in a fully sorted copy, then also drop anything tied with a
/// dropped boundary value, and average the rest.
inline double trimmed(const std::vector<double>& a, const std::vector<double>& b, double c) {
    const std::size_t n = a.size();
    const auto g = static_cast<std::size_t>(std::floor(c * static_cast<double>(n)));
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = a[i] * b[i];
    if (g == 0) {
        long double s = 0.0L;
        for (double v : p) s += v;
        return static_cast<double>(s / n);
    }
    std::vector<double> sorted = p;
    std::sort(sorted.begin(), sorted.end());
    const double lower = sorted[g - 1];
    const double upper = sorted[n - g];
    long double s = 0.0L;
    std::size_t kept = 0;
    for (double v : sorted) {
        if (v <= lower || v >= upper) continue;
        s += v;
        ++kept;
    }
    return static_cast<double>(s / kept);
}

inline int sign(double v) { return (v > 0) - (v < 0); }

/// Kendall's tau-a by scanning every pair.
inline double kendall_tau(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    long long s = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i < j) s += sign(a[i] - a[j]) * sign(b[i] - b[j]);
    return 2.0 * static_cast<double>(s) / (static_cast<double>(n) * static_cast<double>(n - 1));
}

inline double kendall_m3(const std::vector<double>& a, const std::vector<double>& b) {
    return std::sin(std::numbers::pi / 2.0 * kendall_tau(a, b));
}

/// Complex pair sum with sgn(z) = z / |z| evaluated through std::abs.
inline cd kendall_pair_sum(const std::vector<cd>& a, const std::vector<cd>& b) {
    cd s{};
    auto sg = [](cd z) { return z == cd{} ? cd{} : z / std::abs(z); };
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = i + 1; j < a.size(); ++j) s += sg(a[i] - a[j]) * std::conj(sg(b[i] - b[j]));
    return s;
}

/// 1-based ranks for tie-free data.
inline std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::size_t below = 0;
        for (double x : v) below += x < v[i] ? 1 : 0;
        r[i] = static_cast<double>(below + 1);
    }
    return r;
}

/// 1 - 6 sum d^2 / (N (N^2 - 1)), valid without ties.
inline double spearman_rho(const std::vector<double>& a, const std::vector<double>& b) {
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
    const double n = static_cast<double>(a.size());
    return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

inline double spearman_m4(const std::vector<double>& a, const std::vector<double>& b) {
    return 2.0 * std::sin(std::numbers::pi / 6.0 * spearman_rho(a, b));
}

inline double ncv(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += a[i] * sign(b[i]);
        den += std::fabs(b[i]);
    }
    return num / den;
}

/// Naive unnormalized DFT.
inline std::vector<cd> dft(const std::vector<cd>& x, std::size_t nfft) {
    std::vector<cd> out(nfft);
    for (std::size_t k = 0; k < nfft; ++k) {
        cd s{};
        for (std::size_t n = 0; n < x.size(); ++n) {
            const double ph = -2.0 * std::numbers::pi * static_cast<double>((k * n) % nfft) / static_cast<double>(nfft);
            s += x[n] * cd(std::cos(ph), std::sin(ph));
        }
        out[k] = s;
    }
    return out;
}

} // namespace oracle
