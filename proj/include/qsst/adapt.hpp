#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "qsst/error.hpp"
#include "qsst/tfmatrix.hpp"
#include "qsst/tiles.hpp"
#include "qsst/transform.hpp"

namespace qsst {

inline constexpr double kInfiniteEntropy = std::numeric_limits<double>::infinity();

/// Translations of a supertile along one axis at a time. Steps are in points of the
/// coarsest grid (frames for time, 1/(F_min dt) Hz for frequency).
struct PerturbationSpec {
    std::size_t t_step = 4;
    std::size_t y_step = 4;
    std::size_t t_shift = 4;
    std::size_t y_shift = 4;
    std::vector<int> t_dirs{-1, 1};
    std::vector<int> y_dirs{-1, 1};

    static PerturbationSpec none() { return {0, 0, 0, 0, {}, {}}; }

    void validate() const {
        for (int d : t_dirs) detail::require(d == -1 || d == 1, "perturbation: directions must be -1 or +1");
        for (int d : y_dirs) detail::require(d == -1 || d == 1, "perturbation: directions must be -1 or +1");
        if (t_shift > 0) {
            detail::require(t_step >= 1, "perturbation: t_step must be >= 1 when t_shift > 0");
            detail::require(!t_dirs.empty(), "perturbation: time directions empty with t_shift > 0");
        }
        if (y_shift > 0) {
            detail::require(y_step >= 1, "perturbation: y_step must be >= 1 when y_shift > 0");
            detail::require(!y_dirs.empty(), "perturbation: frequency directions empty with y_shift > 0");
        }
    }

    /// The unperturbed box followed by the time-only and frequency-only translates.
    std::vector<TileBox> boxes(const TileBox& base) const {
        std::vector<TileBox> out{base};
        for (int p : t_dirs) {
            for (std::size_t t = 1; t <= t_shift; ++t) {
                const auto d = static_cast<std::int64_t>(p) * static_cast<std::int64_t>(t * t_step);
                out.push_back({base.t0 + d, base.t1 + d, base.y0, base.y1});
            }
        }
        for (int p : y_dirs) {
            for (std::size_t y = 1; y <= y_shift; ++y) {
                const auto d = static_cast<std::int64_t>(p) * static_cast<std::int64_t>(y * y_step);
                out.push_back({base.t0, base.t1, base.y0 + d, base.y1 + d});
            }
        }
        return out;
    }
};

/// |V|^2 and |V|^(2 alpha) of one window's STFT, for repeated box sums.
class EntropyPlane {
public:
    EntropyPlane(const StftMatrix& v, double alpha)
        : frames_(v.frames()), bins_(v.bins()), hop_(v.hop()), alpha_(alpha),
          energy_(v.values().size()), powered_(v.values().size()) {
        detail::require(alpha > 0.0 && alpha < 1.0, "renyi entropy: alpha must lie in (0, 1)");
        for (std::size_t i = 0; i < energy_.size(); ++i) {
            energy_[i] = std::norm(v.values()[i]);
            powered_[i] = std::pow(energy_[i], alpha);
        }
    }

    std::size_t bins() const noexcept { return bins_; }

    /// Sampled Renyi entropy (nats) over the lattice points inside `box`:
    ///   1/(1-alpha) log sum ((H/L)^(1-alpha) |V|^2 / E)^alpha.
    /// nullopt when the box holds no lattice point, +inf when its energy is zero.
    std::optional<double> entropy(const TileBox& box, std::size_t min_fft_size) const {
        const auto n0 = static_cast<std::size_t>(std::max<std::int64_t>(box.t0, 0));
        const auto n1 = static_cast<std::size_t>(std::clamp<std::int64_t>(box.t1, 0, static_cast<std::int64_t>(frames_)));
        const std::size_t k0 = coarse_to_bin(box.y0, min_fft_size);
        const std::size_t k1 = coarse_to_bin(box.y1, min_fft_size);
        if (n0 >= n1 || k0 >= k1) return std::nullopt;
        double e = 0.0, p = 0.0;
        for (std::size_t n = n0; n < n1; ++n) {
            const double* er = energy_.data() + n * bins_;
            const double* pr = powered_.data() + n * bins_;
            for (std::size_t k = k0; k < k1; ++k) {
                e += er[k];
                p += pr[k];
            }
        }
        if (!(e > 0.0)) return kInfiniteEntropy;
        const double weight = std::pow(static_cast<double>(hop_) / static_cast<double>(bins_), 1.0 - alpha_);
        // sum (w |V|^2 / E)^alpha = w^alpha * sum |V|^(2 alpha) / E^alpha
        const double inner = std::pow(weight, alpha_) * p / std::pow(e, alpha_);
        return std::log(inner) / (1.0 - alpha_);
    }

private:
    // First bin k with k F_min >= y L, clamped to [0, L].
    std::size_t coarse_to_bin(std::int64_t y, std::size_t min_fft_size) const {
        if (y <= 0) return 0;
        const auto num = static_cast<std::uint64_t>(y) * bins_;
        const std::uint64_t k = (num + min_fft_size - 1) / min_fft_size;
        return static_cast<std::size_t>(std::min<std::uint64_t>(k, bins_));
    }

    std::size_t frames_, bins_, hop_;
    double alpha_;
    std::vector<double> energy_;
    std::vector<double> powered_;
};

/// Entropy of one window's coefficients inside a box; see EntropyPlane::entropy.
inline std::optional<double> renyi_entropy(const StftMatrix& v, const TileBox& box, double alpha,
                                           std::size_t min_fft_size) {
    return EntropyPlane(v, alpha).entropy(box, min_fft_size);
}

namespace detail {

inline void check_selection_inputs(const std::vector<StftMatrix>& per_window, const SupertileGrid& grid) {
    require(!per_window.empty(), "window selection: no transforms");
    for (const auto& v : per_window) {
        require(v.hop() == grid.hop, "window selection: all transforms must share the grid hop");
        require(v.frames() == grid.frames, "window selection: frame count differs from the grid");
    }
}

/// Winner = argmin over windows (lowest index on ties). Tiles with no finite entropy copy
/// the nearest finite tile in Chebyshev distance, lowest tile index on ties.
inline void pick_winners(TileAssignment& a) {
    const auto& g = a.grid;
    const std::size_t W = a.window_count;
    std::vector<char> finite(g.tile_count(), 0);
    a.winner.assign(g.tile_count(), 0);
    for (std::size_t t = 0; t < g.tile_count(); ++t) {
        double best = kInfiniteEntropy;
        std::size_t arg = 0;
        for (std::size_t w = 0; w < W; ++w) {
            const double r = a.entropy[t * W + w];
            if (r < best) {
                best = r;
                arg = w;
            }
        }
        a.winner[t] = arg;
        finite[t] = std::isfinite(best) ? 1 : 0;
    }
    if (std::none_of(finite.begin(), finite.end(), [](char c) { return c != 0; })) return;
    const auto R = static_cast<std::int64_t>(g.time_tiles), S = static_cast<std::int64_t>(g.freq_tiles);
    const std::vector<std::size_t> source = a.winner;
    for (std::int64_t r = 0; r < R; ++r) {
        for (std::int64_t s = 0; s < S; ++s) {
            const auto t = static_cast<std::size_t>(r * S + s);
            if (finite[t]) continue;
            for (std::int64_t rad = 1; rad < std::max(R, S); ++rad) {
                std::size_t found = g.tile_count();
                for (std::int64_t rr = std::max<std::int64_t>(0, r - rad); rr <= std::min(R - 1, r + rad); ++rr) {
                    for (std::int64_t ss = std::max<std::int64_t>(0, s - rad); ss <= std::min(S - 1, s + rad); ++ss) {
                        if (std::max(std::abs(rr - r), std::abs(ss - s)) != rad) continue;
                        const auto u = static_cast<std::size_t>(rr * S + ss);
                        if (finite[u] && u < found) found = u;
                    }
                }
                if (found < g.tile_count()) {
                    a.winner[t] = source[found];
                    break;
                }
            }
        }
    }
}

}  // namespace detail

/// Single-pass selection: per supertile, the window of minimal sampled Renyi entropy.
inline TileAssignment algorithm1(const std::vector<StftMatrix>& per_window, const SupertileGrid& grid, double alpha) {
    detail::check_selection_inputs(per_window, grid);
    TileAssignment a;
    a.grid = grid;
    a.window_count = per_window.size();
    a.entropy.assign(grid.tile_count() * a.window_count, kInfiniteEntropy);
    for (std::size_t w = 0; w < per_window.size(); ++w) {
        const EntropyPlane plane(per_window[w], alpha);
        for (std::size_t r = 0; r < grid.time_tiles; ++r) {
            for (std::size_t s = 0; s < grid.freq_tiles; ++s) {
                const auto h = plane.entropy(grid.box(r, s), grid.min_fft_size);
                a.entropy[(r * grid.freq_tiles + s) * a.window_count + w] = h.value_or(kInfiniteEntropy);
            }
        }
    }
    detail::pick_winners(a);
    return a;
}

/// Perturbed-supertile selection: per supertile, the window minimizing the entropy averaged
/// over the tile and its axis-aligned translates. Translates holding no lattice point, or
/// of zero energy, are left out of the average.
inline TileAssignment algorithm2(const std::vector<StftMatrix>& per_window, const SupertileGrid& grid, double alpha,
                                 const PerturbationSpec& pert) {
    detail::check_selection_inputs(per_window, grid);
    pert.validate();
    TileAssignment a;
    a.grid = grid;
    a.window_count = per_window.size();
    a.entropy.assign(grid.tile_count() * a.window_count, kInfiniteEntropy);
    for (std::size_t w = 0; w < per_window.size(); ++w) {
        const EntropyPlane plane(per_window[w], alpha);
        for (std::size_t r = 0; r < grid.time_tiles; ++r) {
            for (std::size_t s = 0; s < grid.freq_tiles; ++s) {
                double sum = 0.0;
                std::size_t used = 0;
                for (const auto& box : pert.boxes(grid.box(r, s))) {
                    const auto h = plane.entropy(box, grid.min_fft_size);
                    if (!h || !std::isfinite(*h)) continue;
                    sum += *h;
                    ++used;
                }
                a.entropy[(r * grid.freq_tiles + s) * a.window_count + w] =
                    used > 0 ? sum / static_cast<double>(used) : kInfiniteEntropy;
            }
        }
    }
    detail::pick_winners(a);
    return a;
}

/// Row-major (frequency tile, time tile) matrix of winner indices, low frequency first,
/// for color-coded plotting.
inline std::vector<std::vector<std::size_t>> color_index_matrix(const TileAssignment& a) {
    std::vector<std::vector<std::size_t>> m(a.grid.freq_tiles, std::vector<std::size_t>(a.grid.time_tiles));
    for (std::size_t r = 0; r < a.grid.time_tiles; ++r) {
        for (std::size_t s = 0; s < a.grid.freq_tiles; ++s) m[s][r] = a.at(r, s);
    }
    return m;
}

}  // namespace qsst
