#pragma once

// Periodicity scores computed from a coherence map.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "robustsc/errors.hpp"
#include "robustsc/signal.hpp"
#include "robustsc/spectral.hpp"

namespace robustsc {

/// (cyclic frequency, value) pair of a per-column curve.
struct EpsValue {
    double eps = 0.0;
    double value = 0.0;
    friend bool operator==(const EpsValue&, const EpsValue&) = default;
};

using EpsCurve = std::vector<EpsValue>;

struct MetricsReport {
    EpsCurve amp_ratio;
    double tau_gamma = 0.0;
    std::vector<double> cyclic_eps;
    Band band;
    double fault_hz = 0.0;
    std::optional<EpsCurve> column_profile;
};

/// Positive multiples of f_f that land on the grid, each matched to the
/// nearest grid point within half a step.
inline std::vector<double> cyclic_frequencies(double fault_hz, std::span<const double> eps_grid) {
    if (!(fault_hz > 0.0)) throw InvalidParameter("fault frequency must be positive");
    std::vector<double> out;
    if (eps_grid.empty()) return out;
    const double step = eps_grid.size() > 1 ? eps_grid[1] - eps_grid[0] : 1.0;
    const double lo = eps_grid.front();
    const double hi = eps_grid.back();
    for (std::size_t m = 1;; ++m) {
        const double h = static_cast<double>(m) * fault_hz;
        if (h > hi + 0.5 * step) break;
        if (h < lo - 0.5 * step) continue;
        const auto it = std::min_element(eps_grid.begin(), eps_grid.end(),
                                         [h](double a, double b) { return std::abs(a - h) < std::abs(b - h); });
        if (std::abs(*it - h) <= 0.5 * step + 1e-9 * step) {
            if (out.empty() || out.back() != *it) out.push_back(*it);
        }
    }
    return out;
}

/// Row indices whose bin centre lies in the closed band.
inline std::vector<std::size_t> band_rows(std::span<const double> f_grid, const Band& band) {
    std::vector<std::size_t> rows;
    for (std::size_t j = 0; j < f_grid.size(); ++j)
        if (band.contains(f_grid[j])) rows.push_back(j);
    return rows;
}

/// R(eps) = mean of the band rows in column eps / mean of the whole map.
inline EpsCurve amplitude_ratio(const SCMap& m, const Band& band) {
    if (m.values.empty()) throw InvalidInput("empty map");
    const auto rows = band_rows(m.f_grid, band);
    if (rows.empty()) throw InvalidParameter("band does not contain any frequency bin of the map");
    double total = 0.0;
    for (double v : m.values.data()) total += v;
    const double mean_all = total / static_cast<double>(m.values.data().size());
    if (!(mean_all > 0.0)) throw DegenerateInput("amplitude ratio: map is identically zero");

    EpsCurve out(m.eps_grid.size());
    for (std::size_t c = 0; c < m.eps_grid.size(); ++c) {
        double s = 0.0;
        for (auto r : rows) s += m.values(r, c);
        out[c] = {m.eps_grid[c], (s / static_cast<double>(rows.size())) / mean_all};
    }
    return out;
}

/// tau = sum of R at cyclic eps / sum of R over the whole grid.
inline double performance_indicator(const EpsCurve& ratios, std::span<const double> cyclic_eps) {
    if (ratios.empty()) throw InvalidInput("performance indicator: empty ratio curve");
    double total = 0.0;
    for (const auto& r : ratios) total += r.value;
    if (!(total > 0.0)) throw DegenerateInput("performance indicator: ratios sum to zero");
    double cyc = 0.0;
    for (double e : cyclic_eps) {
        const auto it = std::find_if(ratios.begin(), ratios.end(), [e](const EpsValue& r) { return r.eps == e; });
        if (it == ratios.end()) throw InvalidParameter("cyclic frequency is not on the ratio grid");
        cyc += it->value;
    }
    return cyc / total;
}

/// Column means R'(eps) over all f.
inline EpsCurve column_mean_profile(const SCMap& m) {
    if (m.values.empty()) throw InvalidInput("empty map");
    EpsCurve out(m.eps_grid.size());
    const std::size_t rows = m.values.rows();
    for (std::size_t c = 0; c < m.values.cols(); ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < rows; ++r) s += m.values(r, c);
        out[c] = {m.eps_grid[c], s / static_cast<double>(rows)};
    }
    return out;
}

/// max / mean of a curve; 0 for an all-zero curve.
inline double dispersion(const EpsCurve& curve) {
    if (curve.empty()) return 0.0;
    double mx = 0.0;
    double s = 0.0;
    for (const auto& p : curve) {
        mx = std::max(mx, p.value);
        s += p.value;
    }
    const double mean = s / static_cast<double>(curve.size());
    return mean > 0.0 ? mx / mean : 0.0;
}

/// The k cyclic frequencies with the largest values, in descending order (ties by lower eps).
inline std::vector<double> top_eps(const EpsCurve& curve, std::size_t k) {
    std::vector<EpsValue> sorted(curve);
    std::stable_sort(sorted.begin(), sorted.end(), [](const EpsValue& a, const EpsValue& b) { return a.value > b.value; });
    std::vector<double> out;
    for (std::size_t i = 0; i < std::min(k, sorted.size()); ++i) out.push_back(sorted[i].eps);
    return out;
}

inline MetricsReport compute_metrics(const SCMap& m, const Band& band, double fault_hz, bool with_profile = false) {
    MetricsReport r;
    r.band = band;
    r.fault_hz = fault_hz;
    r.amp_ratio = amplitude_ratio(m, band);
    r.cyclic_eps = cyclic_frequencies(fault_hz, m.eps_grid);
    r.tau_gamma = performance_indicator(r.amp_ratio, r.cyclic_eps);
    if (with_profile) r.column_profile = column_mean_profile(m);
    return r;
}

} // namespace robustsc
