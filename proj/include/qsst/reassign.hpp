#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <bit>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "qsst/error.hpp"
#include "qsst/signal.hpp"
#include "qsst/tfmatrix.hpp"
#include "qsst/transform.hpp"
#include "qsst/window.hpp"

namespace qsst {

inline constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

/// Per-(frame, bin) reassignment frequency (Hz) or time (s). Bins where the STFT magnitude
/// is <= gamma, or exactly zero, are undefined (NaN).
struct ReassignField {
    std::size_t frames = 0;
    std::size_t bins = 0;
    std::size_t hop = 1;
    double fs = 1.0;
    double gamma = 0.0;
    std::size_t window = 0;
    std::vector<double> values;

    ReassignField() = default;
    ReassignField(std::size_t n, std::size_t k, std::size_t h, double f, double g)
        : frames(n), bins(k), hop(h), fs(f), gamma(g), values(n * k, kUndefined) {}

    double operator()(std::size_t n, std::size_t k) const noexcept { return values[n * bins + k]; }
    double& operator()(std::size_t n, std::size_t k) noexcept { return values[n * bins + k]; }
    bool defined(std::size_t n, std::size_t k) const noexcept { return !std::isnan(values[n * bins + k]); }

    std::size_t defined_count() const {
        return static_cast<std::size_t>(std::count_if(values.begin(), values.end(), [](double v) { return !std::isnan(v); }));
    }

    bool same_grid(const ReassignField& o) const noexcept {
        return frames == o.frames && bins == o.bins && hop == o.hop && fs == o.fs;
    }
};

namespace detail {

/// arg on (-pi, pi].
inline double principal_arg(const cplx& z) {
    const double a = std::arg(z);
    return a <= -std::numbers::pi ? std::numbers::pi : a;
}

inline bool above_tolerance(const cplx& v, double gamma) { return v != cplx{} && std::abs(v) > gamma; }

inline void require_same_grid(const StftMatrix& a, const StftMatrix& b, const char* op) {
    if (!a.same_grid(b)) throw InputError(std::string(op) + ": transforms are on different grids");
}

}  // namespace detail

/// Phase-difference reassignment frequency arg(V(f+)/V(f)) / (2 pi dt), where V_shift is
/// the STFT of the one-sample-advanced signal f+[l] = f[l + 1] with the same window.
inline ReassignField reassign_freq(const StftMatrix& v, const StftMatrix& v_shift, double gamma = 0.0) {
    detail::require_same_grid(v, v_shift, "reassign_freq");
    detail::require(gamma >= 0.0, "reassign_freq: gamma must be >= 0");
    ReassignField xi(v.frames(), v.bins(), v.hop(), v.fs(), gamma);
    const double scale = v.fs() / (2.0 * std::numbers::pi);
    for (std::size_t i = 0; i < v.values().size(); ++i) {
        const cplx a = v.values()[i];
        if (!detail::above_tolerance(a, gamma)) continue;
        xi.values[i] = detail::principal_arg(v_shift.values()[i] * std::conj(a)) * scale;
    }
    return xi;
}

/// Reassignment time nH dt - arg(V+(f)/V(f)) / (2 pi), with V+ from stft_freq_shifted.
inline ReassignField reassign_time(const StftMatrix& v, const StftMatrix& v_plus, double gamma = 0.0) {
    detail::require_same_grid(v, v_plus, "reassign_time");
    detail::require(gamma >= 0.0, "reassign_time: gamma must be >= 0");
    ReassignField tau(v.frames(), v.bins(), v.hop(), v.fs(), gamma);
    const double dt = 1.0 / v.fs();
    for (std::size_t n = 0; n < v.frames(); ++n) {
        const double frame_start = static_cast<double>(n * v.hop()) * dt;
        for (std::size_t k = 0; k < v.bins(); ++k) {
            const cplx a = v(n, k);
            if (!detail::above_tolerance(a, gamma)) continue;
            tau(n, k) = frame_start - detail::principal_arg(v_plus(n, k) * std::conj(a)) / (2.0 * std::numbers::pi);
        }
    }
    return tau;
}

/// Frequency-centered reassignment time nH dt - arg(V_hi / V_lo) / (2 pi), where V_hi and
/// V_lo are premodulated by +-1/2 Hz (half the V+ shift each way). Same 1 Hz span as
/// reassign_time, but centered on the bin instead of half a hertz above it.
inline ReassignField reassign_time_centered(const StftMatrix& v, const StftMatrix& v_hi, const StftMatrix& v_lo,
                                            double gamma = 0.0) {
    detail::require_same_grid(v, v_hi, "reassign_time_centered");
    detail::require_same_grid(v, v_lo, "reassign_time_centered");
    detail::require(gamma >= 0.0, "reassign_time_centered: gamma must be >= 0");
    ReassignField tau(v.frames(), v.bins(), v.hop(), v.fs(), gamma);
    const double dt = 1.0 / v.fs();
    for (std::size_t n = 0; n < v.frames(); ++n) {
        const double frame_start = static_cast<double>(n * v.hop()) * dt;
        for (std::size_t k = 0; k < v.bins(); ++k) {
            if (!detail::above_tolerance(v(n, k), gamma)) continue;
            const cplx lo = v_lo(n, k);
            if (lo == cplx{} || v_hi(n, k) == cplx{}) continue;
            tau(n, k) = frame_start - detail::principal_arg(v_hi(n, k) * std::conj(lo)) / (2.0 * std::numbers::pi);
        }
    }
    return tau;
}

/// How reassignment times of the +-1-sample-shifted signals enter the time derivative.
enum class TimeDerivative {
    /// Times of f+ and f- are moved back onto f's time axis (T(f+) + dt, T(f-) - dt) before
    /// differencing. Exact second-order frequency for linear chirps.
    SharedAxis,
    /// Times are differenced as computed on each shifted signal's own axis.
    FrameLocal,
};

/// Discretization of the second-order formula.
enum class SecondOrderScheme {
    /// Every term sits at (nH dt, k / (L dt)): xi averaged over f- and f, D_t xi from their
    /// difference, and T from reassign_time_centered.
    Centered,
    /// The formula as written: xi of f, D_t xi from xi of f+ and f-, T from reassign_time.
    Literal,
};

struct SecondOrderOptions {
    SecondOrderScheme scheme = SecondOrderScheme::Centered;
    /// Sample offset within the frame of the analysis time; < 0 means floor(L / 2).
    double center_index = -1.0;
    TimeDerivative time_derivative = TimeDerivative::SharedAxis;
    /// |D_t T| below this falls back to the first-order value; < 0 means 1e-12 H dt.
    double threshold = -1.0;
};

/// Second-order reassignment frequency
///   xi2 = xi + (D_t xi / D_t T) ((nH + c) dt - T),
/// with central differences D_t over the fields of f- and f+ (f-[l] = f[l - 1]).
inline ReassignField reassign_freq_2nd(const ReassignField& xi_minus, const ReassignField& xi,
                                       const ReassignField& xi_plus, const ReassignField& tau_minus,
                                       const ReassignField& tau, const ReassignField& tau_plus,
                                       std::size_t fft_size, const SecondOrderOptions& opts = {}) {
    for (const ReassignField* f : {&xi_minus, &xi_plus, &tau_minus, &tau, &tau_plus}) {
        if (f->values.empty()) throw InputError("reassign_freq_2nd: missing shifted transform");
        if (!f->same_grid(xi)) throw InputError("reassign_freq_2nd: fields are on different grids");
    }
    const double dt = 1.0 / xi.fs;
    const double center = opts.center_index >= 0.0 ? opts.center_index : std::floor(0.5 * static_cast<double>(fft_size));
    const double theta = opts.threshold >= 0.0 ? opts.threshold : 1e-12 * static_cast<double>(xi.hop) * dt;
    const double axis_shift = opts.time_derivative == TimeDerivative::SharedAxis ? 2.0 * dt : 0.0;

    ReassignField out = xi;
    for (std::size_t n = 0; n < xi.frames; ++n) {
        const double ref_time = (static_cast<double>(n * xi.hop) + center) * dt;
        for (std::size_t k = 0; k < xi.bins; ++k) {
            const std::size_t i = n * xi.bins + k;
            if (std::isnan(xi.values[i]) || std::isnan(tau.values[i])) continue;
            const double xp = xi_plus.values[i], xm = xi_minus.values[i];
            const double tp = tau_plus.values[i], tm = tau_minus.values[i];
            if (std::isnan(xp) || std::isnan(xm) || std::isnan(tp) || std::isnan(tm)) continue;
            const double d_xi = (xp - xm) / (2.0 * dt);
            const double d_tau = (tp - tm + axis_shift) / (2.0 * dt);
            if (std::abs(d_tau) < theta) continue;
            out.values[i] = xi.values[i] + d_xi / d_tau * (ref_time - tau.values[i]);
        }
    }
    return out;
}

/// Centered second-order reassignment frequency
///   xi2 = (xi + xi-)/2 + ((xi - xi-)/dt / D_t T) ((nH + c) dt - T)
/// with xi- the field of f-, and T, T-, T+ frequency-centered times of f, f-, f+.
/// Falls back to xi where |D_t T| < threshold.
inline ReassignField reassign_freq_2nd_centered(const ReassignField& xi_minus, const ReassignField& xi,
                                                const ReassignField& tau_minus, const ReassignField& tau,
                                                const ReassignField& tau_plus, std::size_t fft_size,
                                                const SecondOrderOptions& opts = {}) {
    for (const ReassignField* f : {&xi_minus, &tau_minus, &tau, &tau_plus}) {
        if (f->values.empty()) throw InputError("reassign_freq_2nd: missing shifted transform");
        if (!f->same_grid(xi)) throw InputError("reassign_freq_2nd: fields are on different grids");
    }
    const double dt = 1.0 / xi.fs;
    const double center = opts.center_index >= 0.0 ? opts.center_index : std::floor(0.5 * static_cast<double>(fft_size));
    const double theta = opts.threshold >= 0.0 ? opts.threshold : 1e-12 * static_cast<double>(xi.hop) * dt;
    const double axis_shift = opts.time_derivative == TimeDerivative::SharedAxis ? 2.0 * dt : 0.0;

    ReassignField out = xi;
    for (std::size_t n = 0; n < xi.frames; ++n) {
        const double ref_time = (static_cast<double>(n * xi.hop) + center) * dt;
        for (std::size_t k = 0; k < xi.bins; ++k) {
            const std::size_t i = n * xi.bins + k;
            const double x0 = xi.values[i], xm = xi_minus.values[i];
            const double t0 = tau.values[i], tp = tau_plus.values[i], tm = tau_minus.values[i];
            if (std::isnan(x0) || std::isnan(xm) || std::isnan(t0) || std::isnan(tp) || std::isnan(tm)) continue;
            const double d_tau = (tp - tm + axis_shift) / (2.0 * dt);
            if (std::abs(d_tau) < theta) continue;
            const double d_xi = (x0 - xm) / dt;
            out.values[i] = 0.5 * (x0 + xm) + d_xi / d_tau * (ref_time - t0);
        }
    }
    return out;
}

/// First- and second-order fields of one window. `tau` is always the plain reassignment
/// time of f; the second-order term uses whichever times the scheme calls for.
struct SecondOrderFields {
    StftMatrix v;
    ReassignField xi;
    ReassignField tau;
    ReassignField xi2;
};

inline SecondOrderFields second_order_fields(const DiscreteSignal& signal, const WindowSpec& window, std::size_t hop,
                                             double gamma = 0.0, const SecondOrderOptions& opts = {}) {
    const std::size_t frames = frame_count(signal.size(), window.fft_size(), hop);
    const auto f_minus = shift(signal, -1);
    const auto f_plus = shift(signal, 1);

    SecondOrderFields out;
    out.v = stft(signal, window, hop, frames);
    out.tau = reassign_time(out.v, stft_freq_shifted(signal, window, hop, frames), gamma);

    if (opts.scheme == SecondOrderScheme::Centered) {
        auto centered_time = [&](const DiscreteSignal& s, const StftMatrix& v) {
            return reassign_time_centered(v, stft_shifted_hz(s, window, hop, 0.5, frames),
                                          stft_shifted_hz(s, window, hop, -0.5, frames), gamma);
        };
        ReassignField xi_minus, tau_minus, tau_plus;
        {
            const auto v_minus = stft(f_minus, window, hop, frames);
            xi_minus = reassign_freq(v_minus, out.v, gamma);
            tau_minus = centered_time(f_minus, v_minus);
        }
        {
            const auto v_plus = stft(f_plus, window, hop, frames);
            out.xi = reassign_freq(out.v, v_plus, gamma);
            tau_plus = centered_time(f_plus, v_plus);
        }
        const auto tau_c = centered_time(signal, out.v);
        out.xi2 = reassign_freq_2nd_centered(xi_minus, out.xi, tau_minus, tau_c, tau_plus, window.fft_size(), opts);
        return out;
    }

    ReassignField xi_minus, xi_plus, tau_minus, tau_plus;
    {
        const auto v_minus = stft(f_minus, window, hop, frames);
        xi_minus = reassign_freq(v_minus, out.v, gamma);
        tau_minus = reassign_time(v_minus, stft_freq_shifted(f_minus, window, hop, frames), gamma);
    }
    {
        const auto v_plus = stft(f_plus, window, hop, frames);
        out.xi = reassign_freq(out.v, v_plus, gamma);
        xi_plus = reassign_freq(v_plus, stft(shift(signal, 2), window, hop, frames), gamma);
        tau_plus = reassign_time(v_plus, stft_freq_shifted(f_plus, window, hop, frames), gamma);
    }
    out.xi2 = reassign_freq_2nd(xi_minus, out.xi, xi_plus, tau_minus, out.tau, tau_plus, window.fft_size(), opts);
    return out;
}

// Synchrosqueezing --------------------------------------------------------------

/// For each (frame, output bin), the source bins (per window) whose reassignment landed there.
struct InverseMap {
    struct Entry {
        std::uint32_t kbin;
        std::uint32_t window;
        std::uint32_t bin;
    };
    std::size_t frames = 0;
    std::size_t kbins = 0;
    std::vector<std::size_t> frame_offsets;  // size frames + 1
    std::vector<Entry> entries;               // sorted by (frame, kbin, window, bin)

    std::span<const Entry> frame_entries(std::size_t n) const {
        return {entries.data() + frame_offsets[n], frame_offsets[n + 1] - frame_offsets[n]};
    }

    std::span<const Entry> preimages(std::size_t n, std::size_t k) const {
        const auto all = frame_entries(n);
        const auto lo = std::lower_bound(all.begin(), all.end(), k,
                                         [](const Entry& e, std::size_t key) { return e.kbin < key; });
        const auto hi = std::upper_bound(lo, all.end(), k,
                                         [](std::size_t key, const Entry& e) { return key < e.kbin; });
        return all.subspan(static_cast<std::size_t>(lo - all.begin()), static_cast<std::size_t>(hi - lo));
    }

    bool empty() const { return entries.empty(); }
};

template <class T>
struct SstResult {
    TfMatrix<T> matrix;
    InverseMap inverse;
    std::size_t dropped = 0;                 // defined bins with xi < 0 or landing outside Z_K
    std::vector<double> dropped_energy;      // per frame, sum |V|^2 of dropped bins
    std::vector<double> reassigned_energy;   // per frame, sum |V|^2 of reassigned bins
};

enum class SstMode { Coefficients, Magnitude };

/// One source plane for squeezing: coefficients, their reassignment frequencies, and the
/// window index reported in the inverse map.
struct SqueezeSource {
    const StftMatrix* coeffs;
    const ReassignField* xi;
    std::size_t window;
};

/// Output bin of a reassignment frequency: floor(K dt xi + 1/2), the half-open B-set rule.
inline std::int64_t target_bin(double xi, std::size_t kbins, double fs) {
    return static_cast<std::int64_t>(std::floor(static_cast<double>(kbins) * xi / fs + 0.5));
}

namespace detail {

template <class T>
SstResult<T> squeeze(std::span<const SqueezeSource> sources, std::size_t kbins,
                     const std::function<bool(std::size_t, std::size_t, std::size_t)>& active, bool build_inverse,
                     TfKind kind) {
    require(!sources.empty(), "sst: no source transforms");
    const StftMatrix& first = *sources.front().coeffs;
    std::size_t max_bins = 0;
    for (const auto& s : sources) {
        require(s.coeffs->frames() == first.frames() && s.coeffs->hop() == first.hop() && s.coeffs->fs() == first.fs(),
                "sst: source transforms do not share a frame lattice");
        require(s.xi->frames == s.coeffs->frames() && s.xi->bins == s.coeffs->bins(), "sst: field grid mismatch");
        max_bins = std::max(max_bins, s.coeffs->bins());
    }
    require(kbins >= max_bins, "sst: K must be >= the largest FFT size");

    const std::size_t frames = first.frames();
    SstResult<T> out;
    out.matrix = TfMatrix<T>(frames, kbins, first.hop(), first.fs(), kind, first.label());
    out.dropped_energy.assign(frames, 0.0);
    out.reassigned_energy.assign(frames, 0.0);
    out.inverse.frames = frames;
    out.inverse.kbins = kbins;
    out.inverse.frame_offsets.assign(frames + 1, 0);

    std::vector<InverseMap::Entry> scratch;
    for (std::size_t n = 0; n < frames; ++n) {
        scratch.clear();
        auto row = out.matrix.frame(n);
        for (const auto& src : sources) {
            const std::size_t L = src.coeffs->bins();
            for (std::size_t l = 0; l < L; ++l) {
                if (active && !active(src.window, n, l)) continue;
                const double xi = (*src.xi)(n, l);
                if (std::isnan(xi)) continue;
                const cplx v = (*src.coeffs)(n, l);
                const double e = std::norm(v);
                const std::int64_t k = target_bin(xi, kbins, first.fs());
                if (xi < 0.0 || k < 0 || k >= static_cast<std::int64_t>(kbins)) {
                    ++out.dropped;
                    out.dropped_energy[n] += e;
                    continue;
                }
                if constexpr (std::is_same_v<T, cplx>) {
                    row[static_cast<std::size_t>(k)] += v;
                } else {
                    row[static_cast<std::size_t>(k)] += e;
                }
                out.reassigned_energy[n] += e;
                if (build_inverse) {
                    scratch.push_back({static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(src.window),
                                       static_cast<std::uint32_t>(l)});
                }
            }
        }
        if (build_inverse) {
            std::stable_sort(scratch.begin(), scratch.end(),
                             [](const InverseMap::Entry& a, const InverseMap::Entry& b) {
                                 if (a.kbin != b.kbin) return a.kbin < b.kbin;
                                 if (a.window != b.window) return a.window < b.window;
                                 return a.bin < b.bin;
                             });
            out.inverse.entries.insert(out.inverse.entries.end(), scratch.begin(), scratch.end());
        }
        out.inverse.frame_offsets[n + 1] = out.inverse.entries.size();
    }
    return out;
}

}  // namespace detail

/// Per-window reassignment frequencies of a QSTFT, from the STFTs of f+ per window.
inline std::vector<ReassignField> qstft_reassign_freq(const QstftResult& q, const std::vector<StftMatrix>& shifted,
                                                      double gamma = 0.0) {
    detail::require(shifted.size() == q.per_window.size(), "sst: shifted transforms must match the family");
    std::vector<ReassignField> fields;
    fields.reserve(q.per_window.size());
    for (std::size_t w = 0; w < q.per_window.size(); ++w) {
        fields.push_back(reassign_freq(q.per_window[w], shifted[w], gamma));
        fields.back().window = w;
    }
    return fields;
}

/// SST-QSTFT. Each active above-tolerance bin with xi >= 0 moves to output bin
/// floor(K dt xi + 1/2): coefficient sum (Coefficients) or |V|^2 sum (Magnitude).
template <SstMode Mode>
auto sst(const QstftResult& q, const std::vector<ReassignField>& xi, std::size_t kbins, bool build_inverse = true) {
    using T = std::conditional_t<Mode == SstMode::Coefficients, cplx, double>;
    detail::require(xi.size() == q.per_window.size(), "sst: one reassignment field per window required");
    std::vector<SqueezeSource> sources;
    for (std::size_t w = 0; w < q.per_window.size(); ++w) sources.push_back({&q.per_window[w], &xi[w], w});
    auto active = [&q](std::size_t w, std::size_t n, std::size_t l) { return q.is_active(w, n, l); };
    const bool single = q.per_window.size() == 1;
    return detail::squeeze<T>(sources, kbins, single ? nullptr : std::function<bool(std::size_t, std::size_t, std::size_t)>(active),
                              build_inverse, Mode == SstMode::Coefficients ? TfKind::SstCoefficients : TfKind::SstMagnitude);
}

template <SstMode Mode>
auto sst(const QstftResult& q, const std::vector<StftMatrix>& shifted, double gamma, std::size_t kbins,
         bool build_inverse = true) {
    return sst<Mode>(q, qstft_reassign_freq(q, shifted, gamma), kbins, build_inverse);
}

/// Single-window SST-STFT with a precomputed frequency field (first or second order).
template <SstMode Mode>
auto sst_stft(const StftMatrix& v, const ReassignField& xi, std::size_t kbins, bool build_inverse = false) {
    using T = std::conditional_t<Mode == SstMode::Coefficients, cplx, double>;
    const SqueezeSource src{&v, &xi, 0};
    return detail::squeeze<T>(std::span<const SqueezeSource>(&src, 1), kbins, nullptr, build_inverse,
                              Mode == SstMode::Coefficients ? TfKind::SstCoefficients : TfKind::SstMagnitude);
}

/// Reassignment method: |V|^2 moved to (nearest frame of tau, floor(K dt xi + 1/2)).
/// Frame n' = round((tau - time_offset) / (H dt)), clamped to the lattice.
inline EnergyMatrix rm(const StftMatrix& v, const ReassignField& xi, const ReassignField& tau, std::size_t kbins,
                       double time_offset = 0.0) {
    detail::require(xi.frames == v.frames() && xi.bins == v.bins() && tau.frames == v.frames() &&
                        tau.bins == v.bins(),
                    "rm: fields must share the STFT grid");
    detail::require(kbins >= v.bins(), "rm: K must be >= the FFT size");
    EnergyMatrix out(v.frames(), kbins, v.hop(), v.fs(), TfKind::RmEnergy, v.label());
    const double frame_step = static_cast<double>(v.hop()) / v.fs();
    const auto last = static_cast<std::int64_t>(v.frames()) - 1;
    for (std::size_t n = 0; n < v.frames(); ++n) {
        for (std::size_t l = 0; l < v.bins(); ++l) {
            const double x = xi(n, l), t = tau(n, l);
            if (std::isnan(x) || std::isnan(t) || x < 0.0) continue;
            const std::int64_t k = target_bin(x, kbins, v.fs());
            if (k < 0 || k >= static_cast<std::int64_t>(kbins)) continue;
            const std::int64_t nn = std::clamp<std::int64_t>(std::llround((t - time_offset) / frame_step), 0, last);
            out(static_cast<std::size_t>(nn), static_cast<std::size_t>(k)) += std::norm(v(n, l));
        }
    }
    return out;
}

// Serialization -------------------------------------------------------------------

inline void write_inverse_map(std::ostream& os, const InverseMap& m, const nlohmann::json& extra = {}) {
    nlohmann::json header{{"dtype", "u32"},
                          {"kind", "inverse-map"},
                          {"rows", m.frames},
                          {"kbins", m.kbins},
                          {"entries", m.entries.size()},
                          {"offsets", m.frame_offsets.size()}};
    if (extra.is_object()) {
        for (auto it = extra.begin(); it != extra.end(); ++it) header[it.key()] = it.value();
    }
    std::vector<unsigned char> payload;
    payload.reserve(m.frame_offsets.size() * 8 + m.entries.size() * 12);
    auto push = [&payload](auto v) {
        unsigned char b[sizeof(v)];
        std::memcpy(b, &v, sizeof(v));
        if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(v));
        payload.insert(payload.end(), b, b + sizeof(v));
    };
    for (auto off : m.frame_offsets) push(static_cast<std::uint64_t>(off));
    for (const auto& e : m.entries) {
        push(e.kbin);
        push(e.window);
        push(e.bin);
    }
    write_container(os, header, payload);
}

inline InverseMap read_inverse_map(std::istream& is) {
    const auto c = read_container(is);
    try {
        if (c.header.at("kind").get<std::string>() != "inverse-map") throw FormatError("TFMATRX1: not an inverse map");
        InverseMap m;
        m.frames = c.header.at("rows").get<std::size_t>();
        m.kbins = c.header.at("kbins").get<std::size_t>();
        const auto n_off = c.header.at("offsets").get<std::size_t>();
        const auto n_ent = c.header.at("entries").get<std::size_t>();
        if (n_off != m.frames + 1 || c.payload.size() != n_off * 8 + n_ent * 12) {
            throw FormatError("TFMATRX1: inverse map payload size mismatch");
        }
        const unsigned char* p = c.payload.data();
        m.frame_offsets.resize(n_off);
        for (auto& off : m.frame_offsets) {
            off = static_cast<std::size_t>(detail::get_le<std::uint64_t>(p));
            p += 8;
        }
        m.entries.resize(n_ent);
        for (auto& e : m.entries) {
            e.kbin = detail::get_le<std::uint32_t>(p);
            e.window = detail::get_le<std::uint32_t>(p + 4);
            e.bin = detail::get_le<std::uint32_t>(p + 8);
            p += 12;
        }
        if (m.frame_offsets.back() != n_ent) throw FormatError("TFMATRX1: inverse map offsets inconsistent");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("TFMATRX1: bad inverse map header: ") + e.what());
    }
}

}  // namespace qsst
