#pragma once

// Signal model X = s + Z: a periodic train of decaying oscillations s plus
// i.i.d. heavy-tailed noise Z drawn from one of three families.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "robustsc/errors.hpp"
#include "robustsc/rng.hpp"
#include "robustsc/signal.hpp"

namespace robustsc {

/// Cyclic fault component. Each impulse is B sin(2 pi f_c t) exp(-d t), t >= 0.
struct ImpulseTrainSpec {
    double amplitude = 45.0;   // B, signal units
    double carrier_hz = 5000.0;
    Band band{3500.0, 6500.0}; // informative band, used by metrics
    double decay = 3000.0;     // d, 1/s
    double fault_hz = 30.0;    // f_f
    double phase_offset_s = 0.0;

    double period() const noexcept { return 1.0 / fault_hz; }

    friend bool operator==(const ImpulseTrainSpec&, const ImpulseTrainSpec&) = default;
};

/// Gaussian mixture M(a, p, D): Z = xi + A K.
struct Mixture {
    double a = 300.0;
    double p = 0.001;
    double D = 8.0;
    friend bool operator==(const Mixture&, const Mixture&) = default;
};

/// Scaled Student's t T(nu, delta).
struct StudentT {
    double nu = 2.0;
    double delta = 3.0;
    friend bool operator==(const StudentT&, const StudentT&) = default;
};

/// Symmetric alpha-stable S(alpha, sigma), CF exp(-sigma^alpha |z|^alpha).
struct AlphaStable {
    double alpha = 1.7;
    double sigma = 3.0;
    friend bool operator==(const AlphaStable&, const AlphaStable&) = default;
};

using NoiseModel = std::variant<Mixture, StudentT, AlphaStable>;

inline std::string_view noise_model_id(const NoiseModel& m) {
    return std::visit(
        [](const auto& v) -> std::string_view {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Mixture>) return "mixture";
            else if constexpr (std::is_same_v<T, StudentT>) return "student";
            else return "stable";
        },
        m);
}

namespace detail {

inline void require(bool ok, const char* what) {
    if (!ok) throw InvalidParameter(what);
}

inline bool positive(double v) { return v > 0.0 && std::isfinite(v); }

inline void validate(const Mixture& m) {
    // a = 0 or D = 0 are the degenerate limits without impulses / without the Gaussian part
    require(m.a >= 0.0 && std::isfinite(m.a), "mixture: a must be non-negative");
    require(m.p >= 0.0 && m.p <= 1.0, "mixture: p must lie in [0, 1]");
    require(m.D >= 0.0 && std::isfinite(m.D), "mixture: D must be non-negative");
}

inline void validate(const StudentT& m) {
    require(positive(m.nu), "student: nu must be positive");
    require(positive(m.delta), "student: delta must be positive");
}

inline void validate(const AlphaStable& m) {
    require(m.alpha > 0.0 && m.alpha <= 2.0, "stable: alpha must lie in (0, 2]");
    require(positive(m.sigma), "stable: sigma must be positive");
}

inline void validate_train(const ImpulseTrainSpec& spec, double fs) {
    require(positive(fs), "impulse train: fs must be positive");
    require(spec.amplitude >= 0.0 && std::isfinite(spec.amplitude), "impulse train: amplitude must be non-negative");
    require(positive(spec.carrier_hz), "impulse train: carrier must be positive");
    require(positive(spec.decay), "impulse train: decay must be positive");
    require(positive(spec.fault_hz), "impulse train: fault frequency must be positive");
    require(spec.phase_offset_s >= 0.0 && std::isfinite(spec.phase_offset_s),
            "impulse train: phase offset must be non-negative");
    require(fs / spec.fault_hz >= 2.0, "impulse train: fs / fault_hz must be at least 2");
}

inline void validate_band(const ImpulseTrainSpec& spec, double fs) {
    require(spec.band.lo >= 0.0 && spec.band.lo < spec.band.hi, "band: need 0 <= lo < hi");
    require(spec.band.hi <= fs / 2.0, "band: upper edge exceeds Nyquist");
    require(spec.band.contains(spec.carrier_hz), "band: carrier lies outside the band");
}

} // namespace detail

/// Onset times t_m = offset + m / f_f that fall inside [0, length / fs).
inline std::vector<double> impulse_onsets(const ImpulseTrainSpec& spec, std::size_t length, double fs) {
    detail::validate_train(spec, fs);
    std::vector<double> onsets;
    const double end = static_cast<double>(length) / fs;
    for (std::size_t m = 0;; ++m) {
        const double t = spec.phase_offset_s + static_cast<double>(m) / spec.fault_hz;
        if (!(t < end)) break;
        onsets.push_back(t);
    }
    return onsets;
}

/// Deterministic impulse train. Overlapping tails superpose without truncation.
inline Signal gen_impulse_train(const ImpulseTrainSpec& spec, std::size_t length, double fs) {
    if (length == 0) throw InvalidParameter("impulse train: length must be positive");
    const auto onsets = impulse_onsets(spec, length, fs);
    const double w = 2.0 * std::numbers::pi * spec.carrier_hz;

    std::vector<double> s(length, 0.0);
    std::size_t active = 0; // onsets[0, active) have started
    for (std::size_t k = 0; k < length; ++k) {
        const double t = static_cast<double>(k) / fs;
        while (active < onsets.size() && onsets[active] <= t) ++active;
        double acc = 0.0;
        for (std::size_t m = 0; m < active; ++m) {
            const double tau = t - onsets[m];
            acc += spec.amplitude * std::sin(w * tau) * std::exp(-spec.decay * tau);
        }
        s[k] = acc;
    }
    return Signal(std::move(s), fs, "impulse-train");
}

inline Signal sample_gaussian_mixture(const Mixture& model, std::size_t length, double fs, Seed seed) {
    detail::validate(model);
    if (length == 0) throw InvalidParameter("noise: length must be positive");
    RandomStream rng(seed);
    std::vector<double> z(length);
    for (auto& v : z) {
        const double xi = model.D * rng.normal();
        const double u = rng.uniform();
        const double amp = model.a * rng.uniform();
        const double k = u < 0.5 * model.p ? -1.0 : (u < model.p ? 1.0 : 0.0);
        v = xi + amp * k;
    }
    return Signal(std::move(z), fs, "mixture");
}

/// delta * N / sqrt(chi2_nu / nu); valid for every nu > 0.
inline Signal sample_student_t(const StudentT& model, std::size_t length, double fs, Seed seed) {
    detail::validate(model);
    if (length == 0) throw InvalidParameter("noise: length must be positive");
    RandomStream rng(seed);
    std::vector<double> z(length);
    const double half_nu = 0.5 * model.nu;
    for (auto& v : z) {
        const double n = rng.normal();
        const double chi2 = 2.0 * rng.gamma(half_nu);
        v = model.delta * (n / std::sqrt(chi2 / model.nu));
    }
    return Signal(std::move(z), fs, "student");
}

/// Chambers-Mallows-Stuck transform, symmetric case.
inline Signal sample_alpha_stable(const AlphaStable& model, std::size_t length, double fs, Seed seed) {
    detail::validate(model);
    if (length == 0) throw InvalidParameter("noise: length must be positive");
    RandomStream rng(seed);
    std::vector<double> z(length);
    const double alpha = model.alpha;
    const double half_pi = 0.5 * std::numbers::pi;
    for (auto& v : z) {
        const double V = std::numbers::pi * rng.uniform_open() - half_pi;
        const double W = rng.exponential();
        double x = 0.0;
        if (alpha == 1.0) {
            x = std::tan(V);
        } else {
            x = std::sin(alpha * V) / std::pow(std::cos(V), 1.0 / alpha) *
                std::pow(std::cos((1.0 - alpha) * V) / W, (1.0 - alpha) / alpha);
        }
        v = model.sigma * x;
    }
    return Signal(std::move(z), fs, "stable");
}

inline Signal sample_noise(const NoiseModel& model, std::size_t length, double fs, Seed seed) {
    return std::visit(
        [&](const auto& m) -> Signal {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Mixture>) return sample_gaussian_mixture(m, length, fs, seed);
            else if constexpr (std::is_same_v<T, StudentT>) return sample_student_t(m, length, fs, seed);
            else return sample_alpha_stable(m, length, fs, seed);
        },
        model);
}

/// X[k] = s[k] + Z[k].
inline Signal synthesize(const ImpulseTrainSpec& spec, const NoiseModel& model, std::size_t length, double fs,
                         Seed seed) {
    detail::validate_band(spec, fs);
    const Signal s = gen_impulse_train(spec, length, fs);
    Signal x = sample_noise(model, length, fs, seed);
    auto& xs = x.samples();
    for (std::size_t k = 0; k < length; ++k) xs[k] = s[k] + xs[k];
    x.set_label(std::string("synthetic:") + std::string(noise_model_id(model)));
    return x;
}

/// Adds an impulse train at the signal's own rate and length. Input is untouched.
inline Signal inject_impulses(const Signal& signal, const ImpulseTrainSpec& spec) {
    detail::validate_band(spec, signal.fs());
    const Signal s = gen_impulse_train(spec, signal.size(), signal.fs());
    std::vector<double> out(signal.samples());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = out[k] + s[k];
    return Signal(std::move(out), signal.fs(), signal.label().empty() ? "injected" : signal.label() + "+impulses");
}

} // namespace robustsc
