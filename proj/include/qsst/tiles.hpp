#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include <nlohmann/json.hpp>

#include "qsst/error.hpp"
#include "qsst/window.hpp"

namespace qsst {

/// Half-open rectangle on the lattice: frames [t0, t1), and coarse-frequency units
/// [y0, y1), where one coarse unit is 1/(F_min dt) Hz and F_min is the smallest FFT size.
struct TileBox {
    std::int64_t t0 = 0, t1 = 0;
    std::int64_t y0 = 0, y1 = 0;
};

/// Supertile decomposition of the time-frequency plane. A supertile spans `tile_frames`
/// frames (A) and `tile_coarse_bins` points of the coarsest frequency grid (B).
struct SupertileGrid {
    std::size_t tile_frames = 24;       // A
    std::size_t tile_coarse_bins = 24;  // B
    std::size_t hop = 1;
    double fs = 1.0;
    std::size_t min_fft_size = 1;  // F_min
    std::size_t frames = 0;        // N of the analyzed lattice
    std::size_t time_tiles = 0;    // r in [0, time_tiles)
    std::size_t freq_tiles = 0;    // s in [0, freq_tiles)

    double tile_duration() const { return static_cast<double>(tile_frames * hop) / fs; }
    double tile_bandwidth() const { return static_cast<double>(tile_coarse_bins) * fs / static_cast<double>(min_fft_size); }

    std::size_t tile_count() const noexcept { return time_tiles * freq_tiles; }

    std::size_t time_tile_of(std::size_t n) const noexcept { return n / tile_frames; }

    /// Frequency tile of bin k on a grid of `fft_size` bins: k F_min / (B L) floored.
    std::size_t freq_tile_of(std::size_t k, std::size_t fft_size) const noexcept {
        return static_cast<std::size_t>((static_cast<std::uint64_t>(k) * min_fft_size) /
                                        (static_cast<std::uint64_t>(tile_coarse_bins) * fft_size));
    }

    /// Frequency tile containing `freq_hz`; clamped into range.
    std::size_t freq_tile_of_hz(double freq_hz) const noexcept {
        const double coarse = freq_hz * static_cast<double>(min_fft_size) / fs;
        if (!(coarse > 0.0)) return 0;
        const auto s = static_cast<std::size_t>(coarse / static_cast<double>(tile_coarse_bins));
        return std::min(s, freq_tiles - 1);
    }

    TileBox box(std::size_t r, std::size_t s) const noexcept {
        const auto a = static_cast<std::int64_t>(tile_frames);
        const auto b = static_cast<std::int64_t>(tile_coarse_bins);
        return {static_cast<std::int64_t>(r) * a, static_cast<std::int64_t>(r + 1) * a,
                static_cast<std::int64_t>(s) * b, static_cast<std::int64_t>(s + 1) * b};
    }
};

inline SupertileGrid make_supertile_grid(const QuiltedFamily& family, std::size_t frames, double fs,
                                         std::size_t tile_frames, std::size_t tile_coarse_bins) {
    family.validate();
    detail::require(tile_frames >= 1 && tile_coarse_bins >= 1, "supertile grid: A and B must be >= 1");
    detail::require(frames >= 1, "supertile grid: empty lattice");
    SupertileGrid g;
    g.tile_frames = tile_frames;
    g.tile_coarse_bins = tile_coarse_bins;
    g.hop = family.hop;
    g.fs = fs;
    g.min_fft_size = family.min_fft_size();
    g.frames = frames;
    g.time_tiles = (frames + tile_frames - 1) / tile_frames;
    std::size_t s_max = 0;
    for (const auto& w : family.windows) s_max = std::max(s_max, g.freq_tile_of(w.fft_size() - 1, w.fft_size()));
    g.freq_tiles = s_max + 1;
    return g;
}

/// Winner window per supertile, plus the entropy table the choice was made from.
struct TileAssignment {
    SupertileGrid grid;
    std::size_t window_count = 1;
    std::vector<std::size_t> winner;  // [r * freq_tiles + s]
    std::vector<double> entropy;      // [(r * freq_tiles + s) * window_count + w]; may be empty

    static TileAssignment constant(const SupertileGrid& grid, std::size_t window_count, std::size_t w) {
        detail::require(w < window_count, "constant assignment: window index out of range");
        TileAssignment a;
        a.grid = grid;
        a.window_count = window_count;
        a.winner.assign(grid.tile_count(), w);
        return a;
    }

    std::size_t at(std::size_t r, std::size_t s) const {
        r = std::min(r, grid.time_tiles - 1);
        s = std::min(s, grid.freq_tiles - 1);
        return winner[r * grid.freq_tiles + s];
    }

    /// Window assigned to lattice point (n, k) of a grid with `fft_size` bins.
    std::size_t window_for(std::size_t n, std::size_t k, std::size_t fft_size) const {
        return at(grid.time_tile_of(n), grid.freq_tile_of(k, fft_size));
    }

    double entropy_at(std::size_t r, std::size_t s, std::size_t w) const {
        return entropy[(r * grid.freq_tiles + s) * window_count + w];
    }

    void validate() const {
        detail::require(winner.size() == grid.tile_count(), "tile assignment: winner table size mismatch");
        for (auto w : winner) detail::require(w < window_count, "tile assignment: unknown window index");
    }
};

inline nlohmann::json to_json(const TileAssignment& a, bool with_entropy = true) {
    nlohmann::json j{{"tile_frames", a.grid.tile_frames},
                     {"tile_coarse_bins", a.grid.tile_coarse_bins},
                     {"hop", a.grid.hop},
                     {"fs", a.grid.fs},
                     {"min_fft_size", a.grid.min_fft_size},
                     {"frames", a.grid.frames},
                     {"time_tiles", a.grid.time_tiles},
                     {"freq_tiles", a.grid.freq_tiles},
                     {"window_count", a.window_count},
                     {"winner", a.winner}};
    if (with_entropy && !a.entropy.empty()) {
        nlohmann::json e = nlohmann::json::array();
        for (double v : a.entropy) {
            if (std::isfinite(v)) {
                e.push_back(v);
            } else {
                e.push_back(nullptr);
            }
        }
        j["entropy"] = std::move(e);
    }
    return j;
}

inline TileAssignment tile_assignment_from_json(const nlohmann::json& j) {
    try {
        TileAssignment a;
        a.grid.tile_frames = j.at("tile_frames").get<std::size_t>();
        a.grid.tile_coarse_bins = j.at("tile_coarse_bins").get<std::size_t>();
        a.grid.hop = j.at("hop").get<std::size_t>();
        a.grid.fs = j.at("fs").get<double>();
        a.grid.min_fft_size = j.at("min_fft_size").get<std::size_t>();
        a.grid.frames = j.at("frames").get<std::size_t>();
        a.grid.time_tiles = j.at("time_tiles").get<std::size_t>();
        a.grid.freq_tiles = j.at("freq_tiles").get<std::size_t>();
        a.window_count = j.at("window_count").get<std::size_t>();
        a.winner = j.at("winner").get<std::vector<std::size_t>>();
        if (j.contains("entropy")) {
            for (const auto& v : j.at("entropy")) {
                a.entropy.push_back(v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>());
            }
        }
        a.validate();
        return a;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("tile assignment JSON: ") + e.what());
    }
}

}  // namespace qsst
