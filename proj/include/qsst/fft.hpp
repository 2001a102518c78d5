#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>

#include "qsst/error.hpp"

namespace qsst {

using cplx = std::complex<double>;

namespace detail {

// FFTW's planner is not reentrant; execution on distinct plans is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace detail

/// Owns an in-place FFTW plan pair of a fixed size. Forward uses e^{-2pi i k l / n},
/// inverse is unnormalized.
class Fft {
public:
    explicit Fft(std::size_t n) : n_(n) {
        detail::require(n >= 1, "Fft: size must be positive");
        buf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
        if (!buf_) throw std::bad_alloc();
        std::lock_guard lock(detail::fftw_planner_mutex());
        const int len = static_cast<int>(n);
        fwd_ = fftw_plan_dft_1d(len, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
        inv_ = fftw_plan_dft_1d(len, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }

    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    ~Fft() {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
        fftw_free(buf_);
    }

    std::size_t size() const noexcept { return n_; }

    /// Working buffer of length size(); transforms operate on it in place.
    std::span<cplx> buffer() noexcept { return {reinterpret_cast<cplx*>(buf_), n_}; }

    void forward() noexcept { fftw_execute(fwd_); }
    void inverse() noexcept { fftw_execute(inv_); }

private:
    std::size_t n_;
    fftw_complex* buf_ = nullptr;
    fftw_plan fwd_ = nullptr;
    fftw_plan inv_ = nullptr;
};

}  // namespace qsst
