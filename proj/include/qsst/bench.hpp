#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qsst/adapt.hpp"
#include "qsst/error.hpp"
#include "qsst/reassign.hpp"
#include "qsst/ridge.hpp"
#include "qsst/signal.hpp"
#include "qsst/tiles.hpp"
#include "qsst/transform.hpp"
#include "qsst/window.hpp"

namespace qsst {

enum class BenchMethod { Sst1, Sst2, Rm, SstQstft };

inline std::string to_string(BenchMethod m) {
    switch (m) {
        case BenchMethod::Sst1: return "sst1";
        case BenchMethod::Sst2: return "sst2";
        case BenchMethod::Rm: return "rm";
        case BenchMethod::SstQstft: return "sst-qstft";
    }
    return "?";
}

inline BenchMethod bench_method_from_string(const std::string& s) {
    if (s == "sst1") return BenchMethod::Sst1;
    if (s == "sst2") return BenchMethod::Sst2;
    if (s == "rm") return BenchMethod::Rm;
    if (s == "sst-qstft") return BenchMethod::SstQstft;
    throw InputError("unknown bench method '" + s + "' (expected sst1, sst2, rm, sst-qstft)");
}

/// Base window h0 description; the chirped family is h0 times each chirp rate.
struct BaseWindowConfig {
    WindowKind kind = WindowKind::Hann;
    std::size_t length = 4000;
    std::size_t fft_size = 4096;
    bool normalize = true;

    WindowSpec make() const { return make_window(kind, length, fft_size, normalize); }
};

struct BenchConfig {
    std::vector<double> snrs{6.0, 0.0, -6.0};  // dB; +inf means noiseless
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::vector<BenchMethod> methods{BenchMethod::Sst1, BenchMethod::Sst2, BenchMethod::Rm, BenchMethod::SstQstft};
    SignalSpec signal = crossing_chirps();
    BaseWindowConfig window;
    std::vector<double> chirp_rates{1900.0, 900.0, -900.0, -1900.0};
    std::size_t hop = 250;
    std::size_t kbins = 16384;
    double gamma = 0.0;
    double alpha = 0.5;
    std::size_t tile_a = 24;
    std::size_t tile_b = 24;
    int algorithm = 2;
    PerturbationSpec perturbation;
    SecondOrderScheme second_order = SecondOrderScheme::Centered;
    TimeDerivative time_derivative = TimeDerivative::SharedAxis;
    Band band{5000.0, 15000.0};
    std::size_t q = 1;

    QuiltedFamily family() const {
        QuiltedFamily fam;
        fam.hop = hop;
        const WindowSpec base = window.make();
        for (double s : chirp_rates) fam.windows.push_back(chirp_window(base, s, signal.fs));
        return fam;
    }

    void validate() const {
        detail::require(!snrs.empty(), "bench: SNR list is empty");
        detail::require(!seeds.empty(), "bench: seed list is empty");
        detail::require(!methods.empty(), "bench: method list is empty");
        detail::require(!chirp_rates.empty(), "bench: chirp-rate list is empty");
        detail::require(!signal.components.empty(), "bench: signal has no components");
        for (double s : snrs) detail::require(std::isfinite(s) || s > 0, "bench: SNR must be finite or +inf");
        detail::require(hop >= 1, "bench: hop must be >= 1");
        detail::require(kbins >= window.fft_size, "bench: K must be >= the FFT size");
        detail::require(gamma >= 0.0, "bench: gamma must be >= 0");
        detail::require(alpha > 0.0 && alpha < 1.0, "bench: alpha must lie in (0, 1)");
        detail::require(tile_a >= 1 && tile_b >= 1, "bench: A and B must be >= 1");
        detail::require(algorithm == 1 || algorithm == 2, "bench: algorithm must be 1 or 2");
        detail::require(band.hi > band.lo && band.lo >= 0.0, "bench: empty band");
        perturbation.validate();
        window.make();
    }
};

/// Percents for one (method, component, SNR) cell; one entry per seed, NaN where the run failed.
struct EnergyCell {
    BenchMethod method = BenchMethod::Sst1;
    std::size_t component = 0;
    double snr_db = 0.0;
    std::vector<double> percents;
    double mean = std::numeric_limits<double>::quiet_NaN();
    double stddev = std::numeric_limits<double>::quiet_NaN();
    std::size_t seeds_used = 0;
};

struct BenchReport {
    BenchConfig config;
    std::vector<EnergyCell> cells;  // ordered method, component, SNR
    std::vector<std::string> diagnostics;

    const EnergyCell& cell(BenchMethod m, std::size_t component, double snr_db) const {
        for (const auto& c : cells) {
            if (c.method == m && c.component == component && (c.snr_db == snr_db)) return c;
        }
        throw InputError("bench report: no such cell");
    }
};

/// IF of each component at each frame's window-center time (nH + c) dt.
inline std::vector<std::vector<double>> frame_true_ifs(const SignalSpec& signal, std::size_t frames, std::size_t hop,
                                                        double center_index) {
    std::vector<std::vector<double>> out(signal.components.size(), std::vector<double>(frames));
    for (std::size_t m = 0; m < signal.components.size(); ++m) {
        for (std::size_t n = 0; n < frames; ++n) {
            const double t = (static_cast<double>(n * hop) + center_index) / signal.fs;
            out[m][n] = signal.components[m].inst_freq(t);
        }
    }
    return out;
}

namespace detail {

inline void finish_cell(EnergyCell& c) {
    double sum = 0.0;
    std::size_t used = 0;
    for (double p : c.percents) {
        if (std::isnan(p)) continue;
        sum += p;
        ++used;
    }
    c.seeds_used = used;
    if (used == 0) return;
    c.mean = sum / static_cast<double>(used);
    double ss = 0.0;
    for (double p : c.percents) {
        if (!std::isnan(p)) ss += (p - c.mean) * (p - c.mean);
    }
    c.stddev = used > 1 ? std::sqrt(ss / static_cast<double>(used - 1)) : 0.0;
}

inline std::string snr_label(double snr) {
    if (std::isinf(snr)) return "inf";
    std::ostringstream s;
    s << snr;
    return s.str();
}

}  // namespace detail

/// Energy representation of one method on one (noisy) realization.
inline EnergyMatrix bench_representation(BenchMethod method, const DiscreteSignal& x, const BenchConfig& cfg) {
    const WindowSpec base = cfg.window.make();
    const double c = base.center();
    if (method == BenchMethod::SstQstft) {
        const QuiltedFamily fam = cfg.family();
        auto per_window = family_stfts(x, fam);
        const auto grid = make_supertile_grid(fam, per_window.front().frames(), x.fs, cfg.tile_a, cfg.tile_b);
        const TileAssignment a = cfg.algorithm == 1 ? algorithm1(per_window, grid, cfg.alpha)
                                                    : algorithm2(per_window, grid, cfg.alpha, cfg.perturbation);
        const QstftResult q = qstft(std::move(per_window), fam, a);
        std::vector<ReassignField> xi;
        {
            const auto shifted = family_stfts(shift(x, 1), fam);
            xi = qstft_reassign_freq(q, shifted, cfg.gamma);
        }
        auto res = sst<SstMode::Magnitude>(q, xi, cfg.kbins, false);
        return std::move(res.matrix);
    }
    if (method == BenchMethod::Sst1) {
        const std::size_t frames = frame_count(x.size(), base.fft_size(), cfg.hop);
        const auto v = stft(x, base, cfg.hop, frames);
        const auto xi = reassign_freq(v, stft(shift(x, 1), base, cfg.hop, frames), cfg.gamma);
        return std::move(sst_stft<SstMode::Magnitude>(v, xi, cfg.kbins).matrix);
    }
    if (method == BenchMethod::Rm) {
        const std::size_t frames = frame_count(x.size(), base.fft_size(), cfg.hop);
        const auto v = stft(x, base, cfg.hop, frames);
        const auto xi = reassign_freq(v, stft(shift(x, 1), base, cfg.hop, frames), cfg.gamma);
        const auto tau = reassign_time(v, stft_freq_shifted(x, base, cfg.hop, frames), cfg.gamma);
        return rm(v, xi, tau, cfg.kbins, c / x.fs);
    }
    SecondOrderOptions opts;
    opts.center_index = c;
    opts.scheme = cfg.second_order;
    opts.time_derivative = cfg.time_derivative;
    const auto f = second_order_fields(x, base, cfg.hop, cfg.gamma, opts);
    return std::move(sst_stft<SstMode::Magnitude>(f.v, f.xi2, cfg.kbins).matrix);
}

/// Runs every (SNR, seed) realization through every method and collects ridge energies.
/// A failing method leaves NaN in its cells and a diagnostic; the run continues.
inline BenchReport run_bench(const BenchConfig& cfg,
                             const std::function<void(const std::string&)>& progress = nullptr) {
    cfg.validate();
    BenchReport report;
    report.config = cfg;
    const std::size_t M = cfg.signal.components.size();
    const std::size_t S = cfg.snrs.size(), R = cfg.seeds.size();
    for (auto m : cfg.methods) {
        for (std::size_t comp = 0; comp < M; ++comp) {
            for (double snr : cfg.snrs) {
                EnergyCell c;
                c.method = m;
                c.component = comp;
                c.snr_db = snr;
                c.percents.assign(R, std::numeric_limits<double>::quiet_NaN());
                report.cells.push_back(std::move(c));
            }
        }
    }
    auto cell_index = [&](std::size_t mi, std::size_t comp, std::size_t si) { return (mi * M + comp) * S + si; };

    const DiscreteSignal clean = synth_components(cfg.signal);
    const double center = cfg.window.make().center();
    for (std::size_t si = 0; si < S; ++si) {
        for (std::size_t ri = 0; ri < R; ++ri) {
            const double snr = cfg.snrs[si];
            const auto seed = cfg.seeds[ri];
            DiscreteSignal noisy;
            try {
                noisy = add_noise(clean, snr, seed);
            } catch (const std::exception& e) {
                report.diagnostics.push_back("snr " + detail::snr_label(snr) + " seed " + std::to_string(seed) +
                                             ": noise: " + e.what());
                continue;
            }
            for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
                const auto method = cfg.methods[mi];
                if (progress) {
                    progress(to_string(method) + " snr " + detail::snr_label(snr) + " seed " + std::to_string(seed));
                }
                try {
                    const EnergyMatrix e = bench_representation(method, noisy, cfg);
                    const auto ifs = frame_true_ifs(cfg.signal, e.frames(), cfg.hop, center);
                    for (std::size_t comp = 0; comp < M; ++comp) {
                        report.cells[cell_index(mi, comp, si)].percents[ri] = ridge_energy(e, ifs[comp], cfg.q, cfg.band);
                    }
                } catch (const std::exception& ex) {
                    report.diagnostics.push_back(to_string(method) + " snr " + detail::snr_label(snr) + " seed " +
                                                 std::to_string(seed) + ": " + ex.what());
                }
            }
        }
    }
    for (auto& c : report.cells) detail::finish_cell(c);
    return report;
}

// Report output ----------------------------------------------------------------

/// method,component,snr_db,mean,std,seeds_used,<one column per seed>
inline void write_bench_csv(std::ostream& os, const BenchReport& r) {
    os << "method,component,snr_db,mean,std,seeds_used";
    for (auto s : r.config.seeds) os << ",seed_" << s;
    os << '\n';
    os << std::setprecision(10);
    for (const auto& c : r.cells) {
        os << to_string(c.method) << ',' << c.component + 1 << ',' << detail::snr_label(c.snr_db) << ',' << c.mean << ','
           << c.stddev << ',' << c.seeds_used;
        for (double p : c.percents) os << ',' << p;
        os << '\n';
    }
}

/// Rows: component x SNR; columns: methods; entries: seed-mean percent (std).
inline std::string format_bench_table(const BenchReport& r) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(1);
    os << std::left << std::setw(16) << "component/SNR";
    for (auto m : r.config.methods) os << std::right << std::setw(16) << to_string(m);
    os << '\n';
    for (std::size_t comp = 0; comp < r.config.signal.components.size(); ++comp) {
        for (double snr : r.config.snrs) {
            std::ostringstream label;
            label << "phi'" << comp + 1 << ' ' << detail::snr_label(snr) << " dB";
            os << std::left << std::setw(16) << label.str();
            for (auto m : r.config.methods) {
                const auto& c = r.cell(m, comp, snr);
                std::ostringstream v;
                v << std::fixed << std::setprecision(1) << c.mean << " (" << c.stddev << ")";
                os << std::right << std::setw(16) << v.str();
            }
            os << '\n';
        }
    }
    return os.str();
}

inline nlohmann::json to_json(const BenchReport& r) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : r.cells) {
        nlohmann::json p = nlohmann::json::array();
        for (double v : c.percents) p.push_back(num(v));
        cells.push_back({{"method", to_string(c.method)},
                         {"component", c.component + 1},
                         {"snr_db", std::isinf(c.snr_db) ? nlohmann::json("inf") : nlohmann::json(c.snr_db)},
                         {"mean", num(c.mean)},
                         {"std", num(c.stddev)},
                         {"seeds_used", c.seeds_used},
                         {"percents", p}});
    }
    return {{"seeds", r.config.seeds}, {"q", r.config.q}, {"band_hz", {r.config.band.lo, r.config.band.hi}},
            {"cells", cells}, {"diagnostics", r.diagnostics}};
}

/// Keys (all optional): snrs (numbers or "inf"), seeds, methods, signal, window {kind,
/// length, fft_size, normalize}, chirp_rates, hop, kbins, gamma, alpha, tile_a, tile_b,
/// algorithm, perturbation {t_step, y_step, t_shift, y_shift, dirs}, band [lo, hi], q,
/// second_order ("centered" | "literal"), time_derivative ("shared-axis" | "frame-local").
inline BenchConfig bench_config_from_json(const nlohmann::json& j) {
    BenchConfig c;
    try {
        if (j.contains("snrs")) {
            c.snrs.clear();
            for (const auto& v : j.at("snrs")) {
                if (v.is_string()) {
                    detail::require(v.get<std::string>() == "inf", "bench config: SNR strings must be \"inf\"");
                    c.snrs.push_back(std::numeric_limits<double>::infinity());
                } else {
                    c.snrs.push_back(v.get<double>());
                }
            }
        }
        if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        if (j.contains("methods")) {
            c.methods.clear();
            for (const auto& m : j.at("methods")) c.methods.push_back(bench_method_from_string(m.get<std::string>()));
        }
        if (j.contains("signal")) c.signal = signal_spec_from_json(j.at("signal"));
        if (j.contains("window")) {
            const auto& w = j.at("window");
            c.window.kind = window_kind_from_string(w.value("kind", std::string("hann")));
            c.window.length = w.value("length", c.window.length);
            c.window.fft_size = w.value("fft_size", c.window.length);
            c.window.normalize = w.value("normalize", true);
        }
        if (j.contains("chirp_rates")) c.chirp_rates = j.at("chirp_rates").get<std::vector<double>>();
        c.hop = j.value("hop", c.hop);
        c.kbins = j.value("kbins", c.kbins);
        c.gamma = j.value("gamma", c.gamma);
        c.alpha = j.value("alpha", c.alpha);
        c.tile_a = j.value("tile_a", c.tile_a);
        c.tile_b = j.value("tile_b", c.tile_b);
        c.algorithm = j.value("algorithm", c.algorithm);
        if (j.contains("perturbation")) {
            const auto& p = j.at("perturbation");
            c.perturbation.t_step = p.value("t_step", c.perturbation.t_step);
            c.perturbation.y_step = p.value("y_step", c.perturbation.y_step);
            c.perturbation.t_shift = p.value("t_shift", c.perturbation.t_shift);
            c.perturbation.y_shift = p.value("y_shift", c.perturbation.y_shift);
            if (p.contains("dirs")) {
                const auto d = p.at("dirs").get<std::vector<int>>();
                c.perturbation.t_dirs = d;
                c.perturbation.y_dirs = d;
            }
        }
        if (j.contains("band")) {
            const auto b = j.at("band").get<std::vector<double>>();
            detail::require(b.size() == 2, "bench config: band must be [lo, hi]");
            c.band = {b[0], b[1]};
        }
        c.q = j.value("q", c.q);
        if (j.contains("second_order")) {
            const auto s = j.at("second_order").get<std::string>();
            if (s == "centered") {
                c.second_order = SecondOrderScheme::Centered;
            } else if (s == "literal") {
                c.second_order = SecondOrderScheme::Literal;
            } else {
                throw InputError("bench config: unknown second_order scheme '" + s + "'");
            }
        }
        if (j.contains("time_derivative")) {
            const auto s = j.at("time_derivative").get<std::string>();
            if (s == "shared-axis") {
                c.time_derivative = TimeDerivative::SharedAxis;
            } else if (s == "frame-local") {
                c.time_derivative = TimeDerivative::FrameLocal;
            } else {
                throw InputError("bench config: unknown time_derivative '" + s + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bench config JSON: ") + e.what());
    }
    return c;
}

}  // namespace qsst
