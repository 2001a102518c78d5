#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "qsst/error.hpp"
#include "qsst/fft.hpp"
#include "qsst/signal.hpp"
#include "qsst/tfmatrix.hpp"
#include "qsst/tiles.hpp"
#include "qsst/window.hpp"

namespace qsst {

/// Smallest N with f[l] = 0 for every l >= (L - 1) + (N - 1) H.
inline std::size_t frame_count(std::size_t signal_length, std::size_t fft_size, std::size_t hop) {
    detail::require(hop >= 1, "hop must be >= 1");
    if (signal_length + 1 <= fft_size) return 1;
    const std::size_t excess = signal_length - fft_size + 1;
    return 1 + (excess + hop - 1) / hop;
}

namespace detail {

/// shift_hz != 0 premodulates each frame by e^{-2 pi i l shift_hz dt}.
inline StftMatrix stft_impl(const DiscreteSignal& signal, const WindowSpec& window, std::size_t hop,
                            std::size_t frames, double shift_hz) {
    require(!signal.samples.empty(), "stft: empty signal");
    require(signal.fs > 0.0, "stft: sample rate must be positive");
    require(hop >= 1, "stft: hop must be >= 1");
    window.validate();
    const std::size_t L = window.fft_size();
    if (frames == 0) frames = frame_count(signal.size(), L, hop);

    std::vector<cplx> analysis(L);
    for (std::size_t l = 0; l < L; ++l) analysis[l] = std::conj(window.taps[l]);
    const bool freq_shifted = shift_hz != 0.0;
    if (freq_shifted) {
        const double step = shift_hz * signal.dt();
        for (std::size_t l = 0; l < L; ++l) {
            double cycles = static_cast<double>(l) * step;
            cycles -= std::floor(cycles);
            analysis[l] *= std::polar(1.0, -2.0 * std::numbers::pi * cycles);
        }
    }

    StftMatrix out(frames, L, hop, signal.fs, freq_shifted ? TfKind::StftFreqShifted : TfKind::Stft, window.label);
    Fft fft(L);
    auto buf = fft.buffer();
    for (std::size_t n = 0; n < frames; ++n) {
        const auto start = static_cast<std::ptrdiff_t>(n * hop);
        for (std::size_t l = 0; l < L; ++l) buf[l] = signal.at(start + static_cast<std::ptrdiff_t>(l)) * analysis[l];
        fft.forward();
        std::copy(buf.begin(), buf.end(), out.frame(n).begin());
    }
    return out;
}

}  // namespace detail

/// V[n,k] = sum_l f[l + nH] conj(g[l]) e^{-2 pi i k l / L}. `frames` = 0 picks the minimal N.
inline StftMatrix stft(const DiscreteSignal& signal, const WindowSpec& window, std::size_t hop,
                       std::size_t frames = 0) {
    return detail::stft_impl(signal, window, hop, frames, 0.0);
}

/// V+[n,k] = sum_l f[l + nH] conj(g[l]) e^{-2 pi i l (k/L + dt)}.
inline StftMatrix stft_freq_shifted(const DiscreteSignal& signal, const WindowSpec& window, std::size_t hop,
                                    std::size_t frames = 0) {
    return detail::stft_impl(signal, window, hop, frames, 1.0);
}

/// STFT with every frame premodulated by e^{-2 pi i l shift_hz dt}, i.e. sampled shift_hz
/// above each bin frequency. stft_freq_shifted is shift_hz = 1.
inline StftMatrix stft_shifted_hz(const DiscreteSignal& signal, const WindowSpec& window, std::size_t hop,
                                  double shift_hz, std::size_t frames = 0) {
    return detail::stft_impl(signal, window, hop, frames, shift_hz);
}

/// Per-window STFTs of a quilted family together with the supertile assignment that
/// selects which window's coefficient is active at each lattice point.
struct QstftResult {
    QuiltedFamily family;
    TileAssignment assignment;
    std::vector<StftMatrix> per_window;

    std::size_t frames() const { return per_window.empty() ? 0 : per_window.front().frames(); }

    bool is_active(std::size_t w, std::size_t n, std::size_t k) const {
        return assignment.window_for(n, k, per_window[w].bins()) == w;
    }

    /// The quilted coefficient at (n, k) on window w's grid, or 0 where w is inactive.
    cplx active_value(std::size_t w, std::size_t n, std::size_t k) const {
        return is_active(w, n, k) ? per_window[w](n, k) : cplx{};
    }
};

/// Frame count shared by every window of a family for a signal of the given length.
inline std::size_t family_frame_count(const QuiltedFamily& family, std::size_t signal_length) {
    return frame_count(signal_length, family.max_fft_size(), family.hop);
}

/// Per-window STFTs (optionally frequency-shifted) on a common frame count.
inline std::vector<StftMatrix> family_stfts(const DiscreteSignal& signal, const QuiltedFamily& family,
                                            bool freq_shifted = false) {
    family.validate();
    const std::size_t frames = family_frame_count(family, signal.size());
    std::vector<StftMatrix> out;
    out.reserve(family.size());
    for (const auto& w : family.windows) out.push_back(detail::stft_impl(signal, w, family.hop, frames, freq_shifted ? 1.0 : 0.0));
    return out;
}

inline QstftResult qstft(std::vector<StftMatrix> per_window, const QuiltedFamily& family,
                         const TileAssignment& assignment) {
    assignment.validate();
    detail::require(per_window.size() == family.size(), "qstft: one STFT per window required");
    detail::require(assignment.window_count == family.size(), "qstft: assignment references unknown window index");
    for (const auto& m : per_window) {
        detail::require(m.frames() == per_window.front().frames(), "qstft: per-window frame counts differ");
    }
    detail::require(assignment.grid.frames == per_window.front().frames(), "qstft: assignment grid frame mismatch");
    return QstftResult{family, assignment, std::move(per_window)};
}

inline QstftResult qstft(const DiscreteSignal& signal, const QuiltedFamily& family, const TileAssignment& assignment) {
    return qstft(family_stfts(signal, family), family, assignment);
}

/// Boolean selection over a (frame, bin) grid.
using TfMask = TfMatrix<std::uint8_t>;

inline TfMask make_mask(const StftMatrix& like, bool value) {
    TfMask m(like.frames(), like.bins(), like.hop(), like.fs(), TfKind::Energy, like.label());
    std::fill(m.values().begin(), m.values().end(), static_cast<std::uint8_t>(value));
    return m;
}

/// Overlap-add output. Samples in [interior_begin, interior_end) are covered by every
/// frame that can touch them; the rest are boundary samples.
struct Reconstruction {
    DiscreteSignal signal;
    std::size_t interior_begin = 0;
    std::size_t interior_end = 0;
};

namespace detail {

/// x[j] = sum_n y_n[j - nH] g_n[j - nH] / sum_n |g_n[j - nH]|^2 where y_n is the inverse DFT
/// of the frame's (masked) spectrum.
inline Reconstruction overlap_add(std::size_t frames, std::size_t hop, double fs,
                                  const std::function<const WindowSpec&(std::size_t)>& window_of,
                                  const std::function<bool(std::size_t, std::span<cplx>)>& fill_spectrum,
                                  bool real_output) {
    std::size_t max_len = 0;
    for (std::size_t n = 0; n < frames; ++n) max_len = std::max(max_len, window_of(n).fft_size());
    const std::size_t out_len = (frames - 1) * hop + max_len;
    std::vector<cplx> num(out_len, cplx{});
    std::vector<double> den(out_len, 0.0);

    std::vector<std::unique_ptr<Fft>> ffts;
    auto fft_for = [&](std::size_t L) -> Fft& {
        for (auto& f : ffts) {
            if (f->size() == L) return *f;
        }
        ffts.push_back(std::make_unique<Fft>(L));
        return *ffts.back();
    };

    for (std::size_t n = 0; n < frames; ++n) {
        const WindowSpec& g = window_of(n);
        const std::size_t L = g.fft_size();
        for (std::size_t l = 0; l < L; ++l) den[n * hop + l] += std::norm(g.taps[l]);
        Fft& fft = fft_for(L);
        auto buf = fft.buffer();
        if (!fill_spectrum(n, buf)) continue;
        fft.inverse();
        const double scale = 1.0 / static_cast<double>(L);
        for (std::size_t l = 0; l < L; ++l) num[n * hop + l] += buf[l] * scale * g.taps[l];
    }

    Reconstruction rec;
    rec.signal.fs = fs;
    rec.signal.samples.assign(out_len, cplx{});
    rec.interior_begin = max_len - 1;
    rec.interior_end = (frames - 1) * hop + 1;
    if (rec.interior_end < rec.interior_begin) rec.interior_end = rec.interior_begin;

    std::size_t bad_lo = out_len, bad_hi = 0;
    for (std::size_t j = 0; j < out_len; ++j) {
        if (den[j] > 0.0) {
            const cplx v = num[j] / den[j];
            rec.signal.samples[j] = real_output ? cplx(2.0 * v.real(), 0.0) : v;
        } else if (j >= rec.interior_begin && j < rec.interior_end) {
            bad_lo = std::min(bad_lo, j);
            bad_hi = std::max(bad_hi, j);
        }
    }
    if (bad_lo <= bad_hi) {
        std::ostringstream msg;
        msg << "istft: zero window coverage at interior indices [" << bad_lo << ", " << bad_hi << "]";
        throw InputError(msg.str());
    }
    return rec;
}

}  // namespace detail

/// Masked inverse STFT by weighted overlap-add with the diagonal dual g / sum |g|^2.
/// With `real_output`, returns 2 Re(x) (positive-frequency ridges of a real signal).
inline Reconstruction istft_masked(const StftMatrix& coeffs, const TfMask& mask, const WindowSpec& window,
                                   std::size_t hop, bool real_output = false) {
    detail::require(coeffs.bins() == window.fft_size(), "istft: window FFT size does not match coefficients");
    detail::require(mask.frames() == coeffs.frames() && mask.bins() == coeffs.bins(), "istft: mask grid mismatch");
    detail::require(coeffs.frames() >= 1, "istft: no frames");
    window.validate();
    auto fill = [&](std::size_t n, std::span<cplx> buf) {
        bool any = false;
        for (std::size_t k = 0; k < buf.size(); ++k) {
            const bool on = mask(n, k) != 0;
            buf[k] = on ? coeffs(n, k) : cplx{};
            any = any || on;
        }
        return any;
    };
    return detail::overlap_add(
        coeffs.frames(), hop, coeffs.fs(), [&](std::size_t) -> const WindowSpec& { return window; }, fill,
        real_output);
}

}  // namespace qsst
