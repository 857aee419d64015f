#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "robustsc/errors.hpp"

namespace robustsc {

/// Closed frequency interval [lo, hi] in Hz.
struct Band {
    double lo = 3500.0;
    double hi = 6500.0;

    bool contains(double f) const noexcept { return f >= lo && f <= hi; }
    double midpoint() const noexcept { return 0.5 * (lo + hi); }

    friend bool operator==(const Band&, const Band&) = default;
};

/// Uniformly sampled real time series.
class Signal {
public:
    Signal(std::vector<double> samples, double fs, std::string label = {})
        : samples_(std::move(samples)), fs_(fs), label_(std::move(label)) {
        if (samples_.empty()) throw InvalidInput("signal has no samples");
        if (!(fs_ > 0.0) || !std::isfinite(fs_)) throw InvalidParameter("sampling rate must be positive");
    }

    const std::vector<double>& samples() const noexcept { return samples_; }
    std::vector<double>& samples() noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }
    double fs() const noexcept { return fs_; }
    double duration() const noexcept { return static_cast<double>(samples_.size()) / fs_; }
    const std::string& label() const noexcept { return label_; }
    void set_label(std::string label) { label_ = std::move(label); }

    double operator[](std::size_t k) const noexcept { return samples_[k]; }

private:
    std::vector<double> samples_;
    double fs_;
    std::string label_;
};

} // namespace robustsc
