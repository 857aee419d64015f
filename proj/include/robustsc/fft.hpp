#pragma once

// Thin RAII wrapper over an FFTW forward complex DFT of fixed length.
// Unnormalized: X[j] = sum_n x[n] exp(-2 pi i j n / N).

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <new>
#include <span>

#include "robustsc/errors.hpp"

namespace robustsc {

namespace detail {
// FFTW planning is not thread safe; execution on distinct plans is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}
} // namespace detail

class ForwardDft {
public:
    explicit ForwardDft(std::size_t n) : n_(n) {
        if (n == 0) throw InvalidParameter("DFT length must be positive");
        std::lock_guard lock(detail::fftw_planner_mutex());
        in_ = fftw_alloc_complex(n);
        out_ = fftw_alloc_complex(n);
        if (!in_ || !out_) {
            release();
            throw std::bad_alloc();
        }
        plan_ = fftw_plan_dft_1d(static_cast<int>(n), in_, out_, FFTW_FORWARD, FFTW_ESTIMATE);
        if (!plan_) {
            release();
            throw Error("FFTW failed to create a plan");
        }
    }

    ForwardDft(const ForwardDft&) = delete;
    ForwardDft& operator=(const ForwardDft&) = delete;

    ~ForwardDft() {
        std::lock_guard lock(detail::fftw_planner_mutex());
        release();
    }

    std::size_t size() const noexcept { return n_; }

    /// Input buffer; fill, then call execute().
    std::span<std::complex<double>> input() noexcept {
        return {reinterpret_cast<std::complex<double>*>(in_), n_};
    }
    std::span<const std::complex<double>> output() const noexcept {
        return {reinterpret_cast<const std::complex<double>*>(out_), n_};
    }

    void execute() noexcept { fftw_execute(plan_); }

private:
    void release() noexcept {
        if (plan_) fftw_destroy_plan(plan_);
        if (in_) fftw_free(in_);
        if (out_) fftw_free(out_);
        plan_ = nullptr;
        in_ = out_ = nullptr;
    }

    std::size_t n_;
    fftw_complex* in_ = nullptr;
    fftw_complex* out_ = nullptr;
    fftw_plan plan_ = nullptr;
};

} // namespace robustsc
