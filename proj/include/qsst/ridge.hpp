#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <utility>
#include <vector>

#include "qsst/error.hpp"
#include "qsst/reassign.hpp"
#include "qsst/tfmatrix.hpp"
#include "qsst/transform.hpp"

namespace qsst {

/// Closed frequency interval in Hz.
struct Band {
    double lo = 0.0;
    double hi = 0.0;
};

/// Bins of a K-bin grid within q bins of the bin nearest `freq_hz`:
/// -1/2 - q <= K dt f - k < 1/2 + q. Returns [first, last) before clipping to the grid.
inline std::pair<std::int64_t, std::int64_t> ridge_bin_range(double freq_hz, std::size_t kbins, double fs, std::size_t q) {
    const double x = static_cast<double>(kbins) * freq_hz / fs;
    const double half = 0.5 + static_cast<double>(q);
    const auto first = static_cast<std::int64_t>(std::floor(x - half)) + 1;
    const auto last = static_cast<std::int64_t>(std::floor(x + half)) + 1;
    return {first, last};
}

/// Ridge of component m: per frame, the members (n, k) of the q-bin band around its IF.
struct RidgeSet {
    std::size_t component = 0;
    std::size_t q = 1;
    std::vector<std::pair<std::size_t, std::size_t>> members;
};

inline RidgeSet ridge_set(const EnergyMatrix& c, const std::vector<double>& true_if, std::size_t q,
                          std::size_t component = 0) {
    detail::require(true_if.size() == c.frames(), "ridge_set: one IF value per frame required");
    RidgeSet r{component, q, {}};
    for (std::size_t n = 0; n < c.frames(); ++n) {
        if (!std::isfinite(true_if[n])) continue;
        const auto [a, b] = ridge_bin_range(true_if[n], c.bins(), c.fs(), q);
        for (std::int64_t k = std::max<std::int64_t>(a, 0); k < std::min<std::int64_t>(b, c.bins()); ++k) {
            r.members.emplace_back(n, static_cast<std::size_t>(k));
        }
    }
    return r;
}

/// Percent of the in-band energy (all frames, bins whose frequency lies in `band`) that
/// sits on the q-bin ridge of `true_if` (one IF per frame, Hz; NaN frames are skipped).
inline double ridge_energy(const EnergyMatrix& c, const std::vector<double>& true_if, std::size_t q, Band band) {
    detail::require(true_if.size() == c.frames(), "ridge_energy: one IF value per frame required");
    detail::require(band.hi >= band.lo, "ridge_energy: empty band");
    const double bin_hz = c.fs() / static_cast<double>(c.bins());
    const auto k_lo = static_cast<std::int64_t>(std::ceil(band.lo / bin_hz));
    const auto k_hi = std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(band.hi / bin_hz)) + 1, c.bins());
    detail::require(k_lo < k_hi && k_lo >= 0, "ridge_energy: band contains no bins");

    double total = 0.0, on_ridge = 0.0;
    for (std::size_t n = 0; n < c.frames(); ++n) {
        const auto row = c.frame(n);
        for (std::int64_t k = k_lo; k < k_hi; ++k) total += row[static_cast<std::size_t>(k)];
        if (!std::isfinite(true_if[n])) continue;
        const auto [a, b] = ridge_bin_range(true_if[n], c.bins(), c.fs(), q);
        for (std::int64_t k = std::max(a, k_lo); k < std::min(b, k_hi); ++k) on_ridge += row[static_cast<std::size_t>(k)];
    }
    if (!(total > 0.0)) return 0.0;
    return 100.0 * on_ridge / total;
}

/// Per-frame bin path on a K-bin grid over frames [first_frame, first_frame + bins.size()).
struct RidgeCurve {
    std::size_t first_frame = 0;
    std::vector<std::size_t> bins;
    std::vector<double> energy;

    std::size_t length() const noexcept { return bins.size(); }
    bool covers(std::size_t n) const noexcept { return n >= first_frame && n < first_frame + bins.size(); }
    std::size_t bin_at(std::size_t n) const { return bins.at(n - first_frame); }
};

struct RidgeOptions {
    std::size_t jump_max = 8;           // K-bins a curve may move between frames
    std::size_t suppress_halfwidth = 16;  // K-bins cleared around an extracted curve
    double min_energy = 0.01;           // truncate where energy < this x the frame's max
};

struct RidgeExtraction {
    std::vector<RidgeCurve> curves;
    bool incomplete = false;  // fewer curves found than requested
};

/// Greedy ridge following: seed at the global maximum, extend frame by frame to the
/// largest bin within +-jump_max, stop where the energy drops below min_energy times the
/// frame's remaining maximum, clear a band around the path, repeat.
inline RidgeExtraction extract_ridge(const EnergyMatrix& s, std::size_t count, const RidgeOptions& opts = {}) {
    detail::require(s.kind() != TfKind::Stft && s.kind() != TfKind::StftFreqShifted,
                    "extract_ridge: needs a real-energy representation");
    RidgeExtraction out;
    if (count == 0 || s.frames() == 0) return out;
    EnergyMatrix work = s;
    const std::size_t K = work.bins();

    auto frame_max = [&](std::size_t n) {
        const auto row = work.frame(n);
        return *std::max_element(row.begin(), row.end());
    };
    auto follow = [&](std::size_t n, std::size_t prev) -> std::pair<std::size_t, double> {
        const std::size_t lo = prev >= opts.jump_max ? prev - opts.jump_max : 0;
        const std::size_t hi = std::min(K - 1, prev + opts.jump_max);
        const auto row = work.frame(n);
        std::size_t best = lo;
        for (std::size_t k = lo + 1; k <= hi; ++k) {
            if (row[k] > row[best]) best = k;
        }
        return {best, row[best]};
    };
    auto keep = [&](std::size_t n, double e) { return e > 0.0 && !(e < opts.min_energy * frame_max(n)); };

    for (std::size_t m = 0; m < count; ++m) {
        const auto it = std::max_element(work.values().begin(), work.values().end());
        if (it == work.values().end() || !(*it > 0.0)) {
            out.incomplete = true;
            break;
        }
        const auto idx = static_cast<std::size_t>(it - work.values().begin());
        const std::size_t n0 = idx / K, k0 = idx % K;

        std::vector<std::size_t> fwd_bins{k0};
        std::vector<double> fwd_energy{*it};
        for (std::size_t n = n0 + 1; n < work.frames(); ++n) {
            const auto [k, e] = follow(n, fwd_bins.back());
            if (!keep(n, e)) break;
            fwd_bins.push_back(k);
            fwd_energy.push_back(e);
        }
        std::vector<std::size_t> back_bins;
        std::vector<double> back_energy;
        std::size_t prev = k0;
        std::size_t first = n0;
        for (std::size_t n = n0; n-- > 0;) {
            const auto [k, e] = follow(n, prev);
            if (!keep(n, e)) break;
            back_bins.push_back(k);
            back_energy.push_back(e);
            prev = k;
            first = n;
        }

        RidgeCurve curve;
        curve.first_frame = first;
        curve.bins.assign(back_bins.rbegin(), back_bins.rend());
        curve.energy.assign(back_energy.rbegin(), back_energy.rend());
        curve.bins.insert(curve.bins.end(), fwd_bins.begin(), fwd_bins.end());
        curve.energy.insert(curve.energy.end(), fwd_energy.begin(), fwd_energy.end());

        for (std::size_t i = 0; i < curve.length(); ++i) {
            const std::size_t k = curve.bins[i];
            const std::size_t lo = k >= opts.suppress_halfwidth ? k - opts.suppress_halfwidth : 0;
            const std::size_t hi = std::min(K - 1, k + opts.suppress_halfwidth);
            auto row = work.frame(curve.first_frame + i);
            std::fill(row.begin() + static_cast<std::ptrdiff_t>(lo), row.begin() + static_cast<std::ptrdiff_t>(hi) + 1, 0.0);
        }
        out.curves.push_back(std::move(curve));
    }
    return out;
}

struct ModeReconstruction {
    Reconstruction output;
    std::size_t straddled_frames = 0;  // frames whose +-halo band crossed tiles with other windows
};

/// Resynthesizes one mode from the original quilted coefficients: per frame, the source
/// bins whose reassignment landed within +-halo K-bins of the curve, taken from the window
/// active at the curve's frequency, inverted by overlap-add with per-frame dual
/// normalization.
inline ModeReconstruction reconstruct_mode(const QstftResult& q, const InverseMap& inverse, const RidgeCurve& curve,
                                           std::size_t halo = 4, bool real_output = false) {
    detail::require(!q.per_window.empty(), "reconstruct_mode: empty QSTFT");
    const std::size_t frames = q.frames();
    detail::require(inverse.frames == frames, "reconstruct_mode: inverse map and QSTFT frame counts differ");
    const std::size_t K = inverse.kbins;
    const double fs = q.per_window.front().fs();

    ModeReconstruction out;
    std::vector<std::size_t> window_of_frame(frames, 0);
    std::vector<std::vector<std::uint32_t>> selected(frames);
    for (std::size_t i = 0; i < curve.length(); ++i) {
        const std::size_t n = curve.first_frame + i;
        if (n >= frames) break;
        const std::size_t kstar = curve.bins[i];
        const double freq = static_cast<double>(kstar) * fs / static_cast<double>(K);
        const std::size_t w = q.assignment.at(q.assignment.grid.time_tile_of(n), q.assignment.grid.freq_tile_of_hz(freq));
        window_of_frame[n] = w;
        const std::size_t lo = kstar >= halo ? kstar - halo : 0;
        const std::size_t hi = std::min(K - 1, kstar + halo);
        const auto& grid = q.assignment.grid;
        const std::size_t r = grid.time_tile_of(n);
        const std::size_t s_lo = grid.freq_tile_of_hz(static_cast<double>(lo) * fs / static_cast<double>(K));
        const std::size_t s_hi = grid.freq_tile_of_hz(static_cast<double>(hi) * fs / static_cast<double>(K));
        for (std::size_t s = s_lo; s <= s_hi; ++s) {
            if (q.assignment.at(r, s) != w) {
                ++out.straddled_frames;
                break;
            }
        }
        for (std::size_t k = lo; k <= hi; ++k) {
            for (const auto& e : inverse.preimages(n, k)) {
                if (e.window == w) selected[n].push_back(e.bin);
            }
        }
    }
    // frames outside the curve borrow the window of the nearest curve frame
    if (curve.length() > 0) {
        const std::size_t first = curve.first_frame;
        const std::size_t last = std::min(frames, first + curve.length()) - 1;
        for (std::size_t n = 0; n < first && n < frames; ++n) window_of_frame[n] = window_of_frame[first];
        for (std::size_t n = last + 1; n < frames; ++n) window_of_frame[n] = window_of_frame[last];
    }

    auto fill = [&](std::size_t n, std::span<cplx> buf) {
        if (selected[n].empty()) return false;
        std::fill(buf.begin(), buf.end(), cplx{});
        const StftMatrix& v = q.per_window[window_of_frame[n]];
        for (auto l : selected[n]) buf[l] = v(n, l);
        return true;
    };
    out.output = detail::overlap_add(
        frames, q.family.hop, fs,
        [&](std::size_t n) -> const WindowSpec& { return q.family.windows[window_of_frame[n]]; }, fill, real_output);
    return out;
}

/// frame,time_s,bin,freq_hz,energy
inline void write_ridge_csv(std::ostream& os, const RidgeCurve& curve, std::size_t hop, double fs, std::size_t kbins) {
    os << "frame,time_s,bin,freq_hz,energy\n";
    for (std::size_t i = 0; i < curve.length(); ++i) {
        const std::size_t n = curve.first_frame + i;
        os << n << ',' << static_cast<double>(n * hop) / fs << ',' << curve.bins[i] << ','
           << static_cast<double>(curve.bins[i]) * fs / static_cast<double>(kbins) << ',' << curve.energy[i] << '\n';
    }
}

}  // namespace qsst
