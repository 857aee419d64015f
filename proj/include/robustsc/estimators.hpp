#pragma once

// Dependence estimators for paired samples (w1, w2), real or complex.
//
// Complex inputs follow one convention throughout: the second argument is
// conjugated inside the estimator, so sample_cov(w1, w2) = mean(w1 * conj(w2)).
// Inputs are taken as zero-mean; nothing is re-centered.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "robustsc/errors.hpp"
#include "robustsc/kendall_kernel.hpp"

namespace robustsc {

using cdouble = std::complex<double>;

template <class T>
concept Scalar = std::is_same_v<T, double> || std::is_same_v<T, cdouble>;

// ---------------------------------------------------------------------------
// Estimator selector

struct SampleAcvf {
    friend bool operator==(const SampleAcvf&, const SampleAcvf&) = default;
};
struct SampleAcf {
    friend bool operator==(const SampleAcf&, const SampleAcf&) = default;
};
struct Trimmed {
    double c = 0.015; // trimming constant, [0, 0.5)
    friend bool operator==(const Trimmed&, const Trimmed&) = default;
};
struct Kendall {
    friend bool operator==(const Kendall&, const Kendall&) = default;
};

/// Mapping from the Spearman rank correlation to a Pearson estimate.
enum class SpearmanTransform {
    Standard, // 2 sin(pi rho / 6)
    Printed,  // sin(2 pi rho / 6), kept for reproduction studies
};

struct Spearman {
    SpearmanTransform transform = SpearmanTransform::Standard;
    friend bool operator==(const Spearman&, const Spearman&) = default;
};
struct Ncv {
    friend bool operator==(const Ncv&, const Ncv&) = default;
};

using EstimatorKind = std::variant<SampleAcvf, SampleAcf, Trimmed, Kendall, Spearman, Ncv>;

/// Stable identifier used in CLI flags and result metadata.
inline std::string_view estimator_id(const EstimatorKind& kind) {
    static constexpr std::string_view ids[] = {"acvf", "acf", "trimmed", "kendall", "spearman", "ncv"};
    return ids[kind.index()];
}

/// Identifier plus parameters, e.g. "trimmed(c=0.015)". For display and table rows.
inline std::string estimator_label(const EstimatorKind& kind) {
    std::string s(estimator_id(kind));
    if (const auto* t = std::get_if<Trimmed>(&kind)) {
        char buf[48];
        std::snprintf(buf, sizeof buf, "(c=%g)", t->c);
        s += buf;
    } else if (const auto* sp = std::get_if<Spearman>(&kind)) {
        if (sp->transform == SpearmanTransform::Printed) s += "(printed)";
    }
    return s;
}

/// True when the estimator already yields a correlation (no power normalization needed).
inline bool self_normalizing(const EstimatorKind& kind) {
    return !std::holds_alternative<SampleAcvf>(kind) && !std::holds_alternative<Trimmed>(kind);
}

inline void validate(const EstimatorKind& kind) {
    if (const auto* t = std::get_if<Trimmed>(&kind)) {
        if (!(t->c >= 0.0 && t->c < 0.5)) throw InvalidParameter("trimming constant must lie in [0, 0.5)");
    }
}

inline EstimatorKind parse_estimator(std::string_view id, double trim_c = 0.015,
                                     SpearmanTransform transform = SpearmanTransform::Standard) {
    EstimatorKind kind;
    if (id == "acvf") kind = SampleAcvf{};
    else if (id == "acf") kind = SampleAcf{};
    else if (id == "trimmed") kind = Trimmed{trim_c};
    else if (id == "kendall") kind = Kendall{};
    else if (id == "spearman") kind = Spearman{transform};
    else if (id == "ncv") kind = Ncv{};
    else throw InvalidParameter("unknown estimator id '" + std::string(id) + "'");
    validate(kind);
    return kind;
}

// ---------------------------------------------------------------------------
// Helpers

namespace detail {

template <Scalar T>
void check_pair(std::span<const T> w1, std::span<const T> w2) {
    if (w1.size() != w2.size()) throw InvalidInput("paired sample: length mismatch");
    if (w1.size() < 2) throw InvalidInput("paired sample: need at least two observations");
}

inline double norm2(double v) { return v * v; }
inline double norm2(const cdouble& v) { return v.real() * v.real() + v.imag() * v.imag(); }

/// a * conj(b) with plain real arithmetic.
inline double mul_conj(double a, double b) { return a * b; }
inline cdouble mul_conj(const cdouble& a, const cdouble& b) {
    return {a.real() * b.real() + a.imag() * b.imag(), a.imag() * b.real() - a.real() * b.imag()};
}

inline double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }
inline cdouble sgn(const cdouble& z) {
    const double r = std::abs(z);
    return r > 0.0 ? z / r : cdouble{};
}

/// Mean of the values lying strictly between the g-th smallest and the g-th largest.
inline double trimmed_mean(std::span<const double> v, std::size_t g) {
    const std::size_t n = v.size();
    if (g == 0) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(n);
    }
    if (2 * g > n) throw DegenerateInput("trimmed: all observations trimmed away");
    std::vector<double> sorted(v.begin(), v.end());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(g - 1), sorted.end());
    const double lo = sorted[g - 1];
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n - g), sorted.end());
    const double hi = sorted[n - g];
    double s = 0.0;
    std::size_t kept = 0;
    for (double x : v) {
        if (x > lo && x < hi) {
            s += x;
            ++kept;
        }
    }
    if (kept == 0) throw DegenerateInput("trimmed: all observations trimmed away");
    return s / static_cast<double>(kept);
}

inline std::complex<double> complex_or_real_sin(const cdouble& z) { return std::sin(z); }
inline double complex_or_real_sin(double z) { return std::sin(z); }

} // namespace detail

/// Centered average ranks: rank - (N + 1) / 2, ties share the mean rank.
inline std::vector<double> centered_ranks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    const double center = 0.5 * (static_cast<double>(n) + 1.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && v[idx[j]] == v[idx[i]]) ++j;
        // ranks i+1 .. j share their mean
        const double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t k = i; k < j; ++k) r[idx[k]] = avg - center;
        i = j;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Estimators

/// Sample covariance (1/N) sum w1 conj(w2).
template <Scalar T>
T sample_cov(std::span<const T> w1, std::span<const T> w2) {
    detail::check_pair(w1, w2);
    T s{};
    for (std::size_t i = 0; i < w1.size(); ++i) s += detail::mul_conj(w1[i], w2[i]);
    return s / static_cast<double>(w1.size());
}

/// Sample correlation: sample_cov over (1/N) sqrt(sum |w1|^2 sum |w2|^2).
template <Scalar T>
T sample_corr(std::span<const T> w1, std::span<const T> w2) {
    const T cov = sample_cov(w1, w2);
    double e1 = 0.0;
    double e2 = 0.0;
    for (std::size_t i = 0; i < w1.size(); ++i) {
        e1 += detail::norm2(w1[i]);
        e2 += detail::norm2(w2[i]);
    }
    if (!(e1 > 0.0) || !(e2 > 0.0)) throw DegenerateInput("sample correlation: zero-energy vector");
    return cov / (std::sqrt(e1 * e2) / static_cast<double>(w1.size()));
}

/// Trimmed covariance. Products w1 w2 outside the g = floor(cN) order-statistic
/// bounds are discarded. Complex inputs trim the four real cross-moments
/// independently and recombine them as (RR + II) + (IR - RI) i.
template <Scalar T>
T trimmed_cov(std::span<const T> w1, std::span<const T> w2, double c) {
    detail::check_pair(w1, w2);
    if (!(c >= 0.0 && c < 0.5)) throw InvalidParameter("trimming constant must lie in [0, 0.5)");
    const std::size_t n = w1.size();
    const auto g = static_cast<std::size_t>(std::floor(c * static_cast<double>(n)));
    if (g == 0) return sample_cov(w1, w2);

    if constexpr (std::is_same_v<T, double>) {
        std::vector<double> w3(n);
        for (std::size_t i = 0; i < n; ++i) w3[i] = w1[i] * w2[i];
        return detail::trimmed_mean(w3, g);
    } else {
        std::vector<double> prod(n);
        auto part = [&](auto f1, auto f2) {
            for (std::size_t i = 0; i < n; ++i) prod[i] = f1(w1[i]) * f2(w2[i]);
            return detail::trimmed_mean(prod, g);
        };
        const auto re = [](const cdouble& z) { return z.real(); };
        const auto im = [](const cdouble& z) { return z.imag(); };
        const double rr = part(re, re);
        const double ii = part(im, im);
        const double ri = part(re, im);
        const double ir = part(im, re);
        return {rr + ii, ir - ri};
    }
}

/// Kendall concordance sum over i < j of sgn(w1_i - w1_j) conj(sgn(w2_i - w2_j)),
/// by direct O(N^2) enumeration. Reference path.
template <Scalar T>
T kendall_pair_sum_direct(std::span<const T> w1, std::span<const T> w2) {
    detail::check_pair(w1, w2);
    T s{};
    for (std::size_t i = 0; i < w1.size(); ++i)
        for (std::size_t j = i + 1; j < w1.size(); ++j)
            s += detail::mul_conj(detail::sgn(w1[i] - w1[j]), detail::sgn(w2[i] - w2[j]));
    return s;
}

namespace detail {

/// Sorts v in place and returns the number of strict inversions.
inline std::int64_t count_inversions(std::vector<double>& v) {
    std::vector<double> buf(v.size());
    std::int64_t inv = 0;
    for (std::size_t width = 1; width < v.size(); width *= 2) {
        for (std::size_t lo = 0; lo < v.size(); lo += 2 * width) {
            const std::size_t mid = std::min(lo + width, v.size());
            const std::size_t hi = std::min(lo + 2 * width, v.size());
            std::size_t a = lo, b = mid, k = lo;
            while (a < mid && b < hi) {
                if (v[b] < v[a]) {
                    inv += static_cast<std::int64_t>(mid - a);
                    buf[k++] = v[b++];
                } else {
                    buf[k++] = v[a++];
                }
            }
            while (a < mid) buf[k++] = v[a++];
            while (b < hi) buf[k++] = v[b++];
        }
        v.swap(buf);
    }
    return inv;
}

inline std::int64_t tied_pairs(std::span<const double> sorted) {
    std::int64_t t = 0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i + 1;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const auto m = static_cast<std::int64_t>(j - i);
        t += m * (m - 1) / 2;
        i = j;
    }
    return t;
}

} // namespace detail

/// Concordant minus discordant pairs for real data in O(N log N) (Knight's
/// algorithm). Pairs tied in either coordinate contribute zero.
inline std::int64_t kendall_concordance_fast(std::span<const double> x, std::span<const double> y) {
    detail::check_pair(x, y);
    const std::size_t n = x.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
    });

    std::int64_t tied_x = 0;
    std::int64_t tied_xy = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i + 1;
        while (j < n && x[idx[j]] == x[idx[i]]) ++j;
        const auto m = static_cast<std::int64_t>(j - i);
        tied_x += m * (m - 1) / 2;
        for (std::size_t a = i; a < j;) {
            std::size_t b = a + 1;
            while (b < j && y[idx[b]] == y[idx[a]]) ++b;
            const auto q = static_cast<std::int64_t>(b - a);
            tied_xy += q * (q - 1) / 2;
            a = b;
        }
        i = j;
    }

    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = y[idx[i]];
    const std::int64_t swaps = detail::count_inversions(ys);
    const std::int64_t tied_y = detail::tied_pairs(ys);
    const auto total = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
    return total - tied_x - tied_y + tied_xy - 2 * swaps;
}

/// Kendall rank correlation rho_K = 2 / (N (N - 1)) * concordance sum, complex sgn for complex data.
template <Scalar T>
T kendall_rho(std::span<const T> w1, std::span<const T> w2) {
    detail::check_pair(w1, w2);
    const double n = static_cast<double>(w1.size());
    const double scale = 2.0 / (n * (n - 1.0));
    if constexpr (std::is_same_v<T, double>) {
        return scale * static_cast<double>(kendall_concordance_fast(w1, w2));
    } else {
        // sgn is scale free; rescale by powers of two so the pair products stay finite
        auto split = [](std::span<const cdouble> w, std::vector<double>& re, std::vector<double>& im) {
            double m = 0.0;
            for (const auto& z : w) m = std::max({m, std::abs(z.real()), std::abs(z.imag())});
            int e = 0;
            if (m > 0.0 && std::isfinite(m)) std::frexp(m, &e);
            re.resize(w.size());
            im.resize(w.size());
            for (std::size_t i = 0; i < w.size(); ++i) {
                re[i] = std::ldexp(w[i].real(), -e);
                im[i] = std::ldexp(w[i].imag(), -e);
            }
        };
        std::vector<double> ar, ai, br, bi;
        split(w1, ar, ai);
        split(w2, br, bi);
        const cdouble s = detail::kendall_pair_sum({ar, ai}, {br, bi});
        return scale * s;
    }
}

/// M3 = sin(pi rho_K / 2).
template <Scalar T>
T kendall_corr(std::span<const T> w1, std::span<const T> w2) {
    const T rho = kendall_rho(w1, w2);
    return detail::complex_or_real_sin(std::numbers::pi / 2.0 * rho);
}

/// Spearman rank correlation: Pearson correlation of centered rank vectors.
/// Complex data rank the real and imaginary parts separately.
template <Scalar T>
T spearman_rho(std::span<const T> w1, std::span<const T> w2) {
    detail::check_pair(w1, w2);
    if constexpr (std::is_same_v<T, double>) {
        const auto r1 = centered_ranks(w1);
        const auto r2 = centered_ranks(w2);
        return sample_corr<double>(r1, r2);
    } else {
        const std::size_t n = w1.size();
        auto complex_ranks = [n](std::span<const cdouble> w) {
            std::vector<double> re(n), im(n);
            for (std::size_t i = 0; i < n; ++i) {
                re[i] = w[i].real();
                im[i] = w[i].imag();
            }
            const auto rre = centered_ranks(re);
            const auto rim = centered_ranks(im);
            std::vector<cdouble> r(n);
            for (std::size_t i = 0; i < n; ++i) r[i] = {rre[i], rim[i]};
            return r;
        };
        const auto r1 = complex_ranks(w1);
        const auto r2 = complex_ranks(w2);
        return sample_corr<cdouble>(r1, r2);
    }
}

/// M4: 2 sin(pi rho_S / 6) by default, sin(2 pi rho_S / 6) with the printed transform.
template <Scalar T>
T spearman_corr(std::span<const T> w1, std::span<const T> w2,
                SpearmanTransform transform = SpearmanTransform::Standard) {
    const T rho = spearman_rho(w1, w2);
    if (transform == SpearmanTransform::Printed)
        return detail::complex_or_real_sin(2.0 * std::numbers::pi / 6.0 * rho);
    return 2.0 * detail::complex_or_real_sin(std::numbers::pi / 6.0 * rho);
}

/// Sample normalized covariation: sum w1 conj(sgn(w2)) / sum |w2|.
template <Scalar T>
T ncv(std::span<const T> w1, std::span<const T> w2) {
    detail::check_pair(w1, w2);
    T num{};
    double den = 0.0;
    for (std::size_t i = 0; i < w1.size(); ++i) {
        num += detail::mul_conj(w1[i], detail::sgn(w2[i]));
        den += std::abs(w2[i]);
    }
    if (!(den > 0.0)) throw DegenerateInput("ncv: second vector is identically zero");
    return num / den;
}

/// Dispatches to the estimator selected by kind.
template <Scalar T>
T estimate(const EstimatorKind& kind, std::span<const T> w1, std::span<const T> w2) {
    return std::visit(
        [&](const auto& k) -> T {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, SampleAcvf>) return sample_cov(w1, w2);
            else if constexpr (std::is_same_v<K, SampleAcf>) return sample_corr(w1, w2);
            else if constexpr (std::is_same_v<K, Trimmed>) return trimmed_cov(w1, w2, k.c);
            else if constexpr (std::is_same_v<K, Kendall>) return kendall_corr(w1, w2);
            else if constexpr (std::is_same_v<K, Spearman>) return spearman_corr(w1, w2, k.transform);
            else return ncv(w1, w2);
        },
        kind);
}

/// Convenience overloads for contiguous containers.
template <Scalar T>
T estimate(const EstimatorKind& kind, const std::vector<T>& w1, const std::vector<T>& w2) {
    return estimate<T>(kind, std::span<const T>(w1), std::span<const T>(w2));
}

} // namespace robustsc
