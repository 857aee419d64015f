#pragma once

// Reproducible random streams.
//
// Generator: xoshiro256** (Blackman & Vigna). A stream is identified by a
// (seed, stream_id) pair; its 256-bit state is filled with four successive
// SplitMix64 outputs started from
//
//     mix64(seed) + mix64(stream_id ^ 0x9E3779B97F4A7C15)
//
// where mix64 is the SplitMix64 finalizer. Named sub-streams are obtained with
// derive_stream(component, replicate) = mix64(fnv1a64(component) ^ mix64(replicate)).
//
// All variate transforms below are implemented here (no <random>
// distributions), so output is identical on every standard library.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace robustsc {

struct Seed {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;

    friend bool operator==(const Seed&, const Seed&) = default;
};

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

constexpr std::uint64_t derive_stream(std::string_view component, std::uint64_t replicate) noexcept {
    return mix64(fnv1a64(component) ^ mix64(replicate));
}

class SplitMix64 {
public:
    constexpr explicit SplitMix64(std::uint64_t state) noexcept : state_(state) {}

    constexpr std::uint64_t next() noexcept {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix64(state_);
    }

private:
    std::uint64_t state_;
};

class Xoshiro256ss {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256ss(Seed s) noexcept {
        SplitMix64 sm(mix64(s.seed) + mix64(s.stream_id ^ 0x9E3779B97F4A7C15ULL));
        for (auto& w : s_) w = sm.next();
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    result_type operator()() noexcept {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4];
};

/// Variate source on top of one xoshiro stream.
class RandomStream {
public:
    explicit RandomStream(Seed s) noexcept : gen_(s) {}

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform() noexcept { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform on the open interval (0, 1).
    double uniform_open() noexcept {
        return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal, Marsaglia polar method (pairs cached).
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u = 0.0;
        double v = 0.0;
        double s = 0.0;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    /// Exp(1).
    double exponential() noexcept { return -std::log(uniform_open()); }

    /// Gamma(shape, 1): Marsaglia-Tsang, with the U^(1/k) boost for shape < 1.
    double gamma(double shape) noexcept {
        if (shape < 1.0) {
            const double g = gamma(shape + 1.0);
            return g * std::pow(uniform_open(), 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = 0.0;
            double v = 0.0;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform_open();
            if (u < 1.0 - 0.0331 * (x * x) * (x * x)) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    std::uint64_t bits() noexcept { return gen_(); }

private:
    Xoshiro256ss gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace robustsc
