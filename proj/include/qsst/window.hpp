#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qsst/error.hpp"
#include "qsst/fft.hpp"

namespace qsst {

enum class WindowKind { Hann, Blackman, Rect, Custom };

inline std::string to_string(WindowKind kind) {
    switch (kind) {
        case WindowKind::Hann: return "hann";
        case WindowKind::Blackman: return "blackman";
        case WindowKind::Rect: return "rect";
        case WindowKind::Custom: return "custom";
    }
    return "custom";
}

inline WindowKind window_kind_from_string(const std::string& s) {
    if (s == "hann" || s == "hanning") return WindowKind::Hann;
    if (s == "blackman") return WindowKind::Blackman;
    if (s == "rect" || s == "rectangular" || s == "boxcar") return WindowKind::Rect;
    if (s == "custom") return WindowKind::Custom;
    throw InputError("unknown window kind '" + s + "'");
}

/// Finite analysis window zero-padded to its FFT size. Taps at index >= native_length
/// are exactly zero.
struct WindowSpec {
    std::vector<cplx> taps;
    std::size_t native_length = 0;
    double chirp_rate = 0.0;  // Hz/s; 0 for unchirped windows
    std::string label;

    std::size_t fft_size() const noexcept { return taps.size(); }

    /// Discrete center about which chirping is applied.
    double center() const noexcept { return 0.5 * static_cast<double>(native_length - 1); }

    double l1_norm() const {
        double s = 0.0;
        for (const auto& t : taps) s += std::abs(t);
        return s;
    }

    double l2_norm() const {
        double s = 0.0;
        for (const auto& t : taps) s += std::norm(t);
        return std::sqrt(s);
    }

    void validate() const {
        detail::require(native_length >= 1, "window: native length must be >= 1");
        detail::require(taps.size() >= native_length, "window: fft size smaller than native length");
        bool any = false;
        for (std::size_t i = 0; i < taps.size(); ++i) {
            if (!std::isfinite(taps[i].real()) || !std::isfinite(taps[i].imag())) {
                throw NumericError("window '" + label + "': non-finite tap");
            }
            if (i >= native_length) detail::require(taps[i] == cplx{}, "window: nonzero tap in zero-padding");
            any = any || taps[i] != cplx{};
        }
        detail::require(any, "window '" + label + "': all taps are zero");
    }
};

/// Windows sharing one hop size. Each may have its own FFT size.
struct QuiltedFamily {
    std::vector<WindowSpec> windows;
    std::size_t hop = 1;

    std::size_t size() const noexcept { return windows.size(); }

    std::size_t max_fft_size() const {
        std::size_t m = 0;
        for (const auto& w : windows) m = std::max(m, w.fft_size());
        return m;
    }

    std::size_t min_fft_size() const {
        std::size_t m = windows.empty() ? 0 : windows.front().fft_size();
        for (const auto& w : windows) m = std::min(m, w.fft_size());
        return m;
    }

    void validate() const {
        detail::require(!windows.empty(), "quilted family: needs at least one window");
        detail::require(hop >= 1, "quilted family: hop must be >= 1");
        for (const auto& w : windows) w.validate();
    }
};

/// Symmetric cosine-sum window (or user taps), optionally l1-normalized, zero-padded.
inline WindowSpec make_window(WindowKind kind, std::size_t native_length, std::size_t fft_size,
                              bool normalize_l1 = false, const std::vector<cplx>& custom_taps = {}) {
    WindowSpec w;
    if (kind == WindowKind::Custom) {
        detail::require(!custom_taps.empty(), "make_window: custom window needs taps");
        native_length = custom_taps.size();
        if (fft_size < native_length) fft_size = native_length;
    }
    detail::require(native_length >= 1, "make_window: native length must be >= 1");
    detail::require(fft_size >= native_length, "make_window: fft size must be >= native length");

    w.native_length = native_length;
    w.taps.assign(fft_size, cplx{});
    w.label = to_string(kind) + std::to_string(native_length);
    const double denom = native_length > 1 ? static_cast<double>(native_length - 1) : 1.0;
    for (std::size_t n = 0; n < native_length; ++n) {
        const double x = 2.0 * std::numbers::pi * static_cast<double>(n) / denom;
        switch (kind) {
            case WindowKind::Hann:
                w.taps[n] = native_length == 1 ? 1.0 : 0.5 * (1.0 - std::cos(x));
                break;
            case WindowKind::Blackman:
                w.taps[n] = native_length == 1 ? 1.0 : 0.42 - 0.5 * std::cos(x) + 0.08 * std::cos(2.0 * x);
                break;
            case WindowKind::Rect: w.taps[n] = 1.0; break;
            case WindowKind::Custom: w.taps[n] = custom_taps[n]; break;
        }
    }
    if (normalize_l1) {
        const double norm = w.l1_norm();
        detail::require(norm > 0.0, "make_window: cannot normalize an all-zero window");
        for (auto& t : w.taps) t /= norm;
    }
    w.validate();
    return w;
}

/// Multiplies the native taps by e^{2 pi i sigma (t - t_c)^2 / 2}, t_c the window center.
inline WindowSpec chirp_window(const WindowSpec& base, double sigma, double fs) {
    detail::require(fs > 0.0, "chirp_window: sample rate must be positive");
    WindowSpec w = base;
    w.chirp_rate = base.chirp_rate + sigma;
    if (sigma == 0.0) return w;
    const double c = base.center();
    for (std::size_t l = 0; l < base.native_length; ++l) {
        const double t = (static_cast<double>(l) - c) / fs;
        double cycles = 0.5 * sigma * t * t;
        cycles -= std::floor(cycles);
        w.taps[l] *= std::polar(1.0, 2.0 * std::numbers::pi * cycles);
    }
    w.label = base.label + "_chirp" + std::to_string(static_cast<long long>(std::llround(sigma)));
    return w;
}

struct DecayReport {
    double band_halfwidth = 0.0;   // Hz
    double sup_out = 0.0;          // max |ghat(u)| for |u fs| > band_halfwidth
    double grid_resolution = 0.0;  // Hz
};

/// Sup of the window's semi-discrete Fourier transform outside [-d/2, d/2], evaluated on
/// a zero-padded FFT grid at least `oversample` times denser than the FFT-size grid.
inline DecayReport decay_report(const WindowSpec& window, double d, double fs, std::size_t oversample = 8) {
    detail::require(d > 0.0, "decay_report: band width must be positive");
    detail::require(fs > 0.0, "decay_report: sample rate must be positive");
    detail::require(oversample >= 8, "decay_report: oversampling factor must be >= 8");
    const std::size_t grid = window.fft_size() * oversample;
    Fft fft(grid);
    auto buf = fft.buffer();
    std::fill(buf.begin(), buf.end(), cplx{});
    std::copy(window.taps.begin(), window.taps.end(), buf.begin());
    fft.forward();

    DecayReport report;
    report.band_halfwidth = d / 2.0;
    report.grid_resolution = fs / static_cast<double>(grid);
    for (std::size_t j = 0; j < grid; ++j) {
        double u = static_cast<double>(j) / static_cast<double>(grid);
        if (u > 0.5) u -= 1.0;
        if (std::abs(u * fs) > report.band_halfwidth) report.sup_out = std::max(report.sup_out, std::abs(buf[j]));
    }
    return report;
}

struct ColaResult {
    bool ok = false;
    double deviation = 0.0;  // max_j |sum_n |g[j - nH]|^2 - c| / c at the best c
    double constant = 0.0;   // the best c
};

/// Constant-overlap-add check of |g|^2 at hop H over interior indices.
inline ColaResult cola_check(const WindowSpec& window, std::size_t hop) {
    detail::require(hop >= 1, "cola_check: hop must be >= 1");
    std::vector<double> acc(hop, 0.0);
    for (std::size_t m = 0; m < window.fft_size(); ++m) acc[m % hop] += std::norm(window.taps[m]);
    const auto [lo, hi] = std::minmax_element(acc.begin(), acc.end());
    ColaResult r;
    if (*lo <= 0.0) {
        r.deviation = 1.0;
        r.constant = 0.5 * *hi;
        return r;
    }
    r.constant = 0.5 * (*lo + *hi);
    r.deviation = (*hi - *lo) / (*hi + *lo);
    r.ok = r.deviation < 1e-10;
    return r;
}

// JSON ------------------------------------------------------------------------

inline nlohmann::json to_json(const WindowSpec& w, double fs) {
    nlohmann::json taps = nlohmann::json::array();
    for (const auto& t : w.taps) taps.push_back({t.real(), t.imag()});
    return {{"label", w.label},
            {"sigma", w.chirp_rate},
            {"fs", fs},
            {"native_length", w.native_length},
            {"fft_size", w.fft_size()},
            {"taps", taps}};
}

inline WindowSpec window_from_json(const nlohmann::json& j) {
    WindowSpec w;
    w.label = j.value("label", std::string("custom"));
    w.chirp_rate = j.value("sigma", 0.0);
    detail::require(j.contains("taps") && j.at("taps").is_array(), "window JSON: missing 'taps'");
    for (const auto& t : j.at("taps")) {
        detail::require(t.is_array() && t.size() == 2, "window JSON: taps must be [re, im] pairs");
        w.taps.emplace_back(t[0].get<double>(), t[1].get<double>());
    }
    w.native_length = j.value("native_length", w.taps.size());
    const std::size_t fft = j.value("fft_size", w.taps.size());
    detail::require(fft >= w.native_length, "window JSON: fft_size smaller than native length");
    w.taps.resize(std::max(fft, w.taps.size()), cplx{});
    w.validate();
    return w;
}

/// Family description: either explicit windows, or a base window plus chirp rates.
///   {"hop": 250, "fs": 44100, "base": {"kind": "hann", "length": 4000, "fft_size": 4096,
///    "normalize": true}, "chirp_rates": [1900, 900, -900, -1900]}
///   {"hop": 128, "windows": [{"kind": "blackman", "length": 2000, "fft_size": 2048}, ...]}
inline QuiltedFamily family_from_json(const nlohmann::json& j, double fs) {
    QuiltedFamily fam;
    fam.hop = j.value("hop", std::size_t{250});
    auto make = [&](const nlohmann::json& wj) {
        if (wj.contains("taps")) return window_from_json(wj);
        const auto kind = window_kind_from_string(wj.value("kind", std::string("hann")));
        const std::size_t len = wj.at("length").get<std::size_t>();
        const std::size_t fft = wj.value("fft_size", len);
        auto w = make_window(kind, len, fft, wj.value("normalize", true));
        const double sigma = wj.value("sigma", 0.0);
        return sigma != 0.0 ? chirp_window(w, sigma, fs) : w;
    };
    if (j.contains("windows")) {
        for (const auto& wj : j.at("windows")) fam.windows.push_back(make(wj));
    } else {
        detail::require(j.contains("base"), "family JSON: needs 'windows' or 'base'");
        const auto base = make(j.at("base"));
        const auto rates = j.value("chirp_rates", std::vector<double>{0.0});
        for (double s : rates) fam.windows.push_back(chirp_window(base, s, fs));
    }
    fam.validate();
    return fam;
}

}  // namespace qsst
