#pragma once

// Short-time Fourier analysis and the averaged-cyclic-periodogram estimate of
// the spectral coherence with a pluggable dependence estimator.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <numbers>
#include <span>
#include <thread>
#include <vector>

#include "robustsc/errors.hpp"
#include "robustsc/estimators.hpp"
#include "robustsc/fft.hpp"
#include "robustsc/signal.hpp"

namespace robustsc {

/// Analysis parameters. Defaults reproduce the reference setup
/// (nfft 512, Hann 128, overlap 110, cyclic frequencies 3..100 Hz by 1 Hz).
struct AcpConfig {
    std::size_t nfft = 512;
    std::size_t win_len = 128;
    std::size_t nover = 110;
    double eps_min = 3.0;
    double eps_max = 100.0;
    double eps_step = 1.0;
    unsigned threads = 0; // 0: hardware concurrency

    std::size_t hop() const noexcept { return win_len - nover; }

    /// Segment count K = floor((L - nover) / (n - nover)).
    std::size_t segment_count(std::size_t length) const noexcept {
        if (length < win_len) return 0;
        return (length - nover) / hop();
    }

    std::size_t bin_count() const noexcept { return nfft / 2 + 1; }

    friend bool operator==(const AcpConfig&, const AcpConfig&) = default;
};

/// Throws InvalidParameter on window/overlap/FFT inconsistencies.
inline void validate_stft(const AcpConfig& cfg) {
    if (cfg.win_len < 2) throw InvalidParameter("window length must be at least 2");
    if (cfg.nover >= cfg.win_len) throw InvalidParameter("overlap must be smaller than the window length");
    if (cfg.win_len > cfg.nfft) throw InvalidParameter("window length must not exceed nfft");
}

inline void validate(const AcpConfig& cfg, double fs) {
    validate_stft(cfg);
    if (!(cfg.eps_step > 0.0)) throw InvalidParameter("cyclic frequency step must be positive");
    if (!(cfg.eps_min > 0.0) || cfg.eps_min > cfg.eps_max)
        throw InvalidParameter("need 0 < eps_min <= eps_max");
    if (cfg.eps_max > fs / 2.0) throw InvalidParameter("eps_max exceeds fs / 2");
}

/// Throws when the fault period is not longer than one analysis window.
inline void check_fault_frequency(const AcpConfig& cfg, double fs, double fault_hz) {
    if (!(fault_hz > 0.0)) throw InvalidParameter("fault frequency must be positive");
    if (!(fs / fault_hz > static_cast<double>(cfg.win_len)))
        throw InvalidParameter("fs / fault frequency must exceed the window length");
}

/// eps_min, eps_min + step, ... up to eps_max (inclusive, with half-step slack for rounding).
inline std::vector<double> eps_grid(const AcpConfig& cfg) {
    const auto count = static_cast<std::size_t>(std::floor((cfg.eps_max - cfg.eps_min) / cfg.eps_step + 1e-9)) + 1;
    std::vector<double> g(count);
    for (std::size_t k = 0; k < count; ++k) g[k] = cfg.eps_min + static_cast<double>(k) * cfg.eps_step;
    return g;
}

inline std::vector<double> frequency_grid(const AcpConfig& cfg, double fs) {
    std::vector<double> f(cfg.bin_count());
    for (std::size_t j = 0; j < f.size(); ++j) f[j] = static_cast<double>(j) * fs / static_cast<double>(cfg.nfft);
    return f;
}

/// Symmetric Hann taper 0.5 (1 - cos(2 pi k / (n - 1))).
inline std::vector<double> hann_window(std::size_t n) {
    if (n < 2) throw InvalidParameter("Hann window needs n >= 2");
    std::vector<double> w(n);
    const double step = 2.0 * std::numbers::pi / static_cast<double>(n - 1);
    for (std::size_t k = 0; k < n; ++k) w[k] = 0.5 * (1.0 - std::cos(step * static_cast<double>(k)));
    // exact symmetry and zero endpoints regardless of cos rounding
    for (std::size_t k = 0; k < n / 2; ++k) w[n - 1 - k] = w[k];
    w.front() = w.back() = 0.0;
    return w;
}

/// Row-major [rows x cols] matrix of doubles.
class Grid {
public:
    Grid() = default;
    Grid(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), v_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return v_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return v_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return v_[r * cols_ + c]; }

    std::span<double> data() noexcept { return v_; }
    std::span<const double> data() const noexcept { return v_; }

    double max() const noexcept { return v_.empty() ? 0.0 : *std::max_element(v_.begin(), v_.end()); }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> v_;
};

struct Spectrogram {
    Grid magnitudes;            // [f-bin, frame]
    std::vector<double> f_grid; // Hz
    std::vector<double> t_grid; // seconds, frame centers
    AcpConfig config;
};

/// Magnitude STFT with a Hann window, zero-padded to nfft, bins 0 .. nfft/2.
inline Spectrogram spectrogram(const Signal& x, const AcpConfig& cfg) {
    validate_stft(cfg);
    const std::size_t length = x.size();
    if (length < cfg.win_len) throw InvalidInput("signal is shorter than one analysis window");
    const std::size_t frames = cfg.segment_count(length);
    const auto w = hann_window(cfg.win_len);

    Spectrogram out;
    out.config = cfg;
    out.f_grid = frequency_grid(cfg, x.fs());
    out.magnitudes = Grid(cfg.bin_count(), frames);
    out.t_grid.resize(frames);

    ForwardDft dft(cfg.nfft);
    auto in = dft.input();
    for (std::size_t i = 0; i < frames; ++i) {
        const std::size_t start = i * cfg.hop();
        std::fill(in.begin(), in.end(), std::complex<double>{});
        for (std::size_t k = 0; k < cfg.win_len; ++k) in[k] = w[k] * x[start + k];
        dft.execute();
        const auto spec = dft.output();
        for (std::size_t j = 0; j < cfg.bin_count(); ++j) out.magnitudes(j, i) = std::abs(spec[j]);
        out.t_grid[i] = (static_cast<double>(start) + 0.5 * static_cast<double>(cfg.win_len)) / x.fs();
    }
    return out;
}

/// Demodulated, windowed DFT slices for one cyclic frequency. Both matrices
/// hold all nfft bins, stored bin-major so that a bin's K segment values are contiguous.
struct DemodulatedSlices {
    std::size_t nfft = 0;
    std::size_t segments = 0;
    std::vector<cdouble> x; // X_w: signal * exp(+i pi eps t / fs)
    std::vector<cdouble> y; // Y_w: signal * exp(-i pi eps t / fs)

    std::span<const cdouble> x_row(std::size_t bin) const { return {x.data() + bin * segments, segments}; }
    std::span<const cdouble> y_row(std::size_t bin) const { return {y.data() + bin * segments, segments}; }
};

namespace detail {

/// Reusable per-thread state for slice computation.
class SliceWorkspace {
public:
    explicit SliceWorkspace(const AcpConfig& cfg) : dft_(cfg.nfft), window_(hann_window(cfg.win_len)) {}

    void compute(const Signal& sig, double eps, const AcpConfig& cfg, DemodulatedSlices& out) {
        const std::size_t length = sig.size();
        const std::size_t K = cfg.segment_count(length);
        const std::size_t nfft = cfg.nfft;
        out.nfft = nfft;
        out.segments = K;
        out.x.resize(nfft * K);
        out.y.resize(nfft * K);

        // demodulator over the span actually covered by segments
        const std::size_t covered = (K - 1) * cfg.hop() + cfg.win_len;
        demod_.resize(covered);
        const double rate = std::numbers::pi * eps / sig.fs();
        for (std::size_t t = 0; t < covered; ++t) {
            const double ph = rate * static_cast<double>(t);
            demod_[t] = {std::cos(ph), std::sin(ph)};
        }

        auto in = dft_.input();
        for (std::size_t i = 0; i < K; ++i) {
            const std::size_t start = i * cfg.hop();
            std::fill(in.begin(), in.end(), cdouble{});
            for (std::size_t k = 0; k < cfg.win_len; ++k) in[k] = (window_[k] * sig[start + k]) * demod_[start + k];
            dft_.execute();
            const auto spec = dft_.output();
            for (std::size_t j = 0; j < nfft; ++j) {
                out.x[j * K + i] = spec[j];
                // the signal is real, so the conjugate demodulation mirrors the spectrum
                out.y[j * K + i] = std::conj(spec[(nfft - j) % nfft]);
            }
        }
    }

private:
    ForwardDft dft_;
    std::vector<double> window_;
    std::vector<cdouble> demod_;
};

} // namespace detail

inline DemodulatedSlices demodulated_spectral_slices(const Signal& x, double eps, const AcpConfig& cfg) {
    validate_stft(cfg);
    if (x.size() < cfg.win_len) throw InvalidInput("signal is shorter than one analysis window");
    DemodulatedSlices out;
    detail::SliceWorkspace ws(cfg);
    ws.compute(x, eps, cfg, out);
    return out;
}

/// Bi-frequency coherence map |gamma(f, eps)|^2, rows = f bins, columns = eps.
struct SCMap {
    Grid values;
    std::vector<double> f_grid;
    std::vector<double> eps_grid;
    EstimatorKind estimator = SampleAcvf{};
    bool rescaled = false;
    std::size_t degenerate_cells = 0; // cells forced to 0 (undefined statistic)
};

/// Divides every entry by the global maximum. All-zero maps are returned unchanged.
inline SCMap rescale_map(SCMap m) {
    const double mx = m.values.max();
    if (mx > 0.0) {
        for (auto& v : m.values.data()) v = v / mx;
    }
    m.rescaled = true;
    return m;
}

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// One coherence cell from the slices of bin j.
inline double coherence_cell(const EstimatorKind& kind, std::span<const cdouble> y_row, std::span<const cdouble> x_row,
                             bool& degenerate) {
    degenerate = false;
    try {
        const cdouble s = estimate<cdouble>(kind, y_row, x_row);
        double v = detail::norm2(s);
        if (!self_normalizing(kind)) {
            const double px = estimate<cdouble>(kind, x_row, x_row).real();
            const double py = estimate<cdouble>(kind, y_row, y_row).real();
            const double den = px * py;
            if (!(den > 0.0) || !std::isfinite(den)) {
                degenerate = true;
                return 0.0;
            }
            v = v / den;
        }
        if (!std::isfinite(v)) {
            degenerate = true;
            return 0.0;
        }
        return v;
    } catch (const DegenerateInput&) {
        degenerate = true;
        return 0.0;
    }
}

/// Spectral coherence map by the averaged cyclic periodogram, with the sample
/// statistic in each (f, eps) cell replaced by `kind`. Columns are computed
/// independently (optionally in parallel); the result does not depend on
/// thread count or order. The returned map is rescaled to max 1.
inline SCMap robust_spectral_coherence(const Signal& x, const AcpConfig& cfg, const EstimatorKind& kind,
                                       const ProgressFn& progress = {}) {
    validate(cfg, x.fs());
    validate(kind);
    if (x.size() < cfg.win_len) throw InvalidInput("signal is shorter than one analysis window");
    if (cfg.segment_count(x.size()) < 2) throw InvalidInput("need at least two segments");

    SCMap map;
    map.estimator = kind;
    map.f_grid = frequency_grid(cfg, x.fs());
    map.eps_grid = eps_grid(cfg);
    const std::size_t rows = map.f_grid.size();
    const std::size_t cols = map.eps_grid.size();
    map.values = Grid(rows, cols);

    unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, cols));

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::vector<std::size_t> degenerate_per_col(cols, 0);
    std::mutex progress_mutex;

    auto worker = [&] {
        detail::SliceWorkspace ws(cfg);
        DemodulatedSlices slices;
        for (std::size_t c = next++; c < cols; c = next++) {
            ws.compute(x, map.eps_grid[c], cfg, slices);
            std::size_t bad = 0;
            for (std::size_t j = 0; j < rows; ++j) {
                bool degenerate = false;
                map.values(j, c) = coherence_cell(kind, slices.y_row(j), slices.x_row(j), degenerate);
                bad += degenerate ? 1 : 0;
            }
            degenerate_per_col[c] = bad;
            const std::size_t d = ++done;
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(d, cols);
            }
        }
    };

    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        std::exception_ptr failure;
        std::mutex failure_mutex;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                try {
                    worker();
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = cols; // stop the others
                }
            });
        }
        pool.clear();
        if (failure) std::rethrow_exception(failure);
    }

    for (auto b : degenerate_per_col) map.degenerate_cells += b;
    return rescale_map(std::move(map));
}

} // namespace robustsc
