// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "qsst/qsst.hpp"

using namespace qsst;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

DiscreteSignal random_signal(std::size_t n, double fs, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d;
    DiscreteSignal s;
    s.fs = fs;
    for (std::size_t i = 0; i < n; ++i) s.samples.emplace_back(d(rng), d(rng));
    return s;
}

WindowSpec random_window(std::size_t native, std::size_t fft, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<cplx> taps;
    for (std::size_t i = 0; i < native; ++i) taps.emplace_back(u(rng), u(rng));
    return make_window(WindowKind::Custom, native, fft, false, taps);
}

// direct summation: sum_l f[l + nH] conj(g[l]) e^{-2 pi i l (k / L + shift dt)}
cplx direct_stft(const DiscreteSignal& f, const WindowSpec& g, std::size_t hop, std::size_t n, std::size_t k,
                 double shift_hz) {
    const std::size_t L = g.fft_size();
    cplx acc{};
    for (std::size_t l = 0; l < L; ++l) {
        const double cycles = static_cast<double>(k * l % L) / static_cast<double>(L) + static_cast<double>(l) * shift_hz / f.fs;
        acc += f.at(static_cast<std::ptrdiff_t>(l + n * hop)) * std::conj(g.taps[l]) *
               std::polar(1.0, -2.0 * std::numbers::pi * cycles);
    }
    return acc;
}

// 1. constant-frequency exactness of the reassignment frequency
Outcome tone_frequency() {
    const double fs = 44100.0;
    const std::size_t L = 512, H = 128;
    const auto g = make_window(WindowKind::Rect, L, L, true);
    double worst = 0.0;
    std::size_t bins = 0;
    for (int i = 1; i <= 10; ++i) {
        ComponentSpec c;
        c.offset_hz = 2000.0 * i - 3.7;
        const auto x = synth_components({c}, 1.0, fs, false);
        const auto v = stft(x, g, H);
        const auto xi = reassign_freq(v, stft(shift(x, 1), g, H, v.frames()), 0.0);
        for (std::size_t n = 0; n < v.frames(); ++n) {
            if (n * H + L + 1 > x.size()) continue;  // window or its one-sample advance leaves the signal
            for (std::size_t k = 0; k < L; ++k) {
                if (!xi.defined(n, k)) continue;
                ++bins;
                worst = std::max(worst, std::abs(xi(n, k) - c.offset_hz));
            }
        }
    }
    return {bins > 0 && worst <= 1e-6, fmt("10 tones, %zu defined bins, max |xi - c| = %.2e Hz (tol 1e-6)", bins, worst)};
}

// 2. spike time exactness
Outcome spike_time() {
    const double fs = 44100.0;
    const std::size_t L = 4096, H = 250;
    const auto g = make_window(WindowKind::Hann, 4000, L, true);
    double worst = 0.0;
    std::size_t bins = 0;
    for (std::size_t j : {1000ul, 22050ul, 40001ul}) {
        DiscreteSignal s;
        s.fs = fs;
        s.samples.assign(50000, cplx{});
        s.samples[j] = 1.0;
        const auto v = stft(s, g, H);
        const auto tau = reassign_time(v, stft_freq_shifted(s, g, H, v.frames()));
        for (std::size_t n = 0; n < v.frames(); ++n) {
            for (std::size_t k = 0; k < L; ++k) {
                if (!tau.defined(n, k)) continue;
                ++bins;
                worst = std::max(worst, std::abs(tau(n, k) - static_cast<double>(j) / fs));
            }
        }
    }
    return {bins > 0 && worst <= 1e-9, fmt("3 spikes, %zu defined bins, max |T - l0 dt| = %.2e s (tol 1e-9)", bins, worst)};
}

// 3. FFT paths against direct summation
Outcome brute_force() {
    const double fs = 8000.0;
    const std::size_t H = 16;
    double e_stft = 0.0, e_shift = 0.0, e_q = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto f = random_signal(256, fs, seed);
        const auto g = random_window(50 + seed, 64, 100 + seed);
        const auto v = stft(f, g, H);
        const auto vp = stft_freq_shifted(f, g, H);
        for (std::size_t n = 0; n < v.frames(); ++n) {
            for (std::size_t k = 0; k < 64; ++k) {
                e_stft = std::max(e_stft, std::abs(v(n, k) - direct_stft(f, g, H, n, k, 0.0)));
                e_shift = std::max(e_shift, std::abs(vp(n, k) - direct_stft(f, g, H, n, k, 1.0)));
            }
        }

        QuiltedFamily fam;
        fam.hop = H;
        fam.windows = {random_window(64, 64, 200 + seed), random_window(30, 32, 300 + seed), random_window(40, 64, 400 + seed)};
        const std::size_t frames = family_frame_count(fam, f.size());
        auto assignment = TileAssignment::constant(make_supertile_grid(fam, frames, fs, 3, 4), 3, 0);
        std::mt19937_64 rng(seed);
        for (auto& w : assignment.winner) w = rng() % 3;
        const auto q = qstft(f, fam, assignment);
        for (std::size_t w = 0; w < 3; ++w) {
            const std::size_t L = fam.windows[w].fft_size();
            for (std::size_t n = 0; n < frames; ++n) {
                for (std::size_t k = 0; k < L; ++k) {
                    const bool active = assignment.window_for(n, k, L) == w;
                    const cplx want = active ? direct_stft(f, fam.windows[w], H, n, k, 0.0) : cplx{};
                    e_q = std::max(e_q, std::abs(q.active_value(w, n, k) - want));
                }
            }
        }
    }
    const double worst = std::max({e_stft, e_shift, e_q});
    return {worst <= 1e-9, fmt("max-abs: stft %.1e, freq-shifted %.1e, qstft %.1e (tol 1e-9)", e_stft, e_shift, e_q)};
}

// 4. energy bookkeeping of magnitude-mode SST-QSTFT on the crossing chirps
Outcome energy_conservation() {
    const auto spec = crossing_chirps();
    const auto x = synth_components(spec);
    BenchConfig cfg;
    const auto fam = cfg.family();
    auto per = family_stfts(x, fam);
    const auto grid = make_supertile_grid(fam, per.front().frames(), x.fs, cfg.tile_a, cfg.tile_b);
    const auto assignment = algorithm2(per, grid, cfg.alpha, cfg.perturbation);
    const auto q = qstft(std::move(per), fam, assignment);
    const auto xi = qstft_reassign_freq(q, family_stfts(shift(x, 1), fam));
    const std::size_t K = cfg.kbins;
    const auto s = sst<SstMode::Magnitude>(q, xi, K, false);

    double worst_out = 0.0, worst_total = 0.0;
    std::size_t dropped = 0;
    for (std::size_t n = 0; n < q.frames(); ++n) {
        // independent tally over the active quilted bins
        double reassigned = 0.0, lost = 0.0;
        for (std::size_t w = 0; w < fam.size(); ++w) {
            for (std::size_t l = 0; l < q.per_window[w].bins(); ++l) {
                if (!q.is_active(w, n, l) || !xi[w].defined(n, l)) continue;
                const double e = std::norm(q.per_window[w](n, l));
                const double z = xi[w](n, l);
                const auto k = static_cast<std::int64_t>(std::floor(static_cast<double>(K) * z / x.fs + 0.5));
                if (z < 0.0 || k < 0 || k >= static_cast<std::int64_t>(K)) {
                    lost += e;
                    ++dropped;
                } else {
                    reassigned += e;
                }
            }
        }
        double out = 0.0;
        for (double v : s.matrix.frame(n)) out += v;
        const double scale = std::max(reassigned + lost, 1e-300);
        worst_out = std::max(worst_out, std::abs(out - reassigned) / std::max(reassigned, 1e-300));
        worst_total = std::max(worst_total, std::abs(out + s.dropped_energy[n] - reassigned - lost) / scale);
    }
    const bool ok = worst_out <= 1e-9 && worst_total <= 1e-9 && dropped == s.dropped;
    return {ok, fmt("%zu frames: max rel |out - reassigned| %.1e, with dropped %.1e (tol 1e-9); dropped bins %zu vs %zu counted",
                    q.frames(), worst_out, worst_total, s.dropped, dropped)};
}

// 5. full-mask inverse
Outcome perfect_reconstruction() {
    const auto f = random_signal(44100, 44100.0, 5);
    const auto g = make_window(WindowKind::Hann, 512, 512, false);
    const auto v = stft(f, g, 256);
    const auto rec = istft_masked(v, make_mask(v, true), g, 256);
    double num = 0.0, den = 0.0;
    const std::size_t end = std::min(rec.interior_end, f.size());
    for (std::size_t j = rec.interior_begin; j < end; ++j) {
        num += std::norm(rec.signal.samples[j] - f.samples[j]);
        den += std::norm(f.samples[j]);
    }
    const double rel = std::sqrt(num / den);
    return {rel < 1e-10, fmt("interior [%zu, %zu): relative l2 error %.2e (tol 1e-10)", rec.interior_begin, end, rel)};
}

// 6. algorithm 2 without translates is algorithm 1
Outcome algorithm_equivalence() {
    std::size_t differing = 0, tiles = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto x = random_signal(8000, 8000.0, 1000 + seed);
        const auto base = make_window(WindowKind::Hann, 250, 256, true);
        QuiltedFamily fam;
        fam.hop = 32;
        for (double s : {4000.0, 0.0, -4000.0}) fam.windows.push_back(chirp_window(base, s, x.fs));
        fam.windows.push_back(make_window(WindowKind::Blackman, 120, 128, true));
        const auto per = family_stfts(x, fam);
        const auto grid = make_supertile_grid(fam, per.front().frames(), x.fs, 8, 6);
        const auto a1 = algorithm1(per, grid, 0.5);
        const auto a2 = algorithm2(per, grid, 0.5, PerturbationSpec::none());
        tiles += a1.winner.size();
        for (std::size_t t = 0; t < a1.winner.size(); ++t) differing += a1.winner[t] != a2.winner[t] ? 1 : 0;
    }
    return {differing == 0, fmt("20 signals, %zu tiles, %zu differ", tiles, differing)};
}

// 7. crossing-chirp ridge energies against the reference table
Outcome ridge_energy_table() {
    BenchConfig cfg;  // crossing chirps, 5 seeds, 6 / 0 / -6 dB, all four methods
    const auto r = run_bench(cfg);
    std::string detail;
    for (const auto& d : r.diagnostics) detail += "\n      diagnostic: " + d;

    // reference percents [method][component][snr 6, 0, -6]
    const std::map<BenchMethod, std::array<std::array<double, 3>, 4>> ref{
        {BenchMethod::Sst1, {{{3.3, 2.6, 1.5}, {10.5, 7.9, 4.0}, {10.6, 8.4, 4.4}, {3.3, 2.6, 1.4}}}},
        {BenchMethod::Sst2, {{{9.7, 5.4, 2.1}, {19.8, 13.7, 6.0}, {20.2, 14.2, 6.5}, {9.9, 5.3, 2.0}}}},
        {BenchMethod::Rm, {{{15.4, 10.8, 4.6}, {21.8, 16.1, 7.6}, {22.2, 16.7, 8.2}, {15.3, 10.6, 4.5}}}},
        {BenchMethod::SstQstft, {{{16.9, 13.0, 6.3}, {20.6, 15.7, 8.1}, {21.0, 16.2, 8.9}, {17.1, 12.8, 6.1}}}},
    };
    const double snrs[3] = {6.0, 0.0, -6.0};
    auto mean = [&](BenchMethod m, std::size_t comp, double snr) { return r.cell(m, comp, snr).mean; };

    bool order = true;
    for (std::size_t comp : {0ul, 3ul}) {
        for (double snr : {-6.0, 0.0}) {
            const double a = mean(BenchMethod::SstQstft, comp, snr), b = mean(BenchMethod::Rm, comp, snr);
            const double c = mean(BenchMethod::Sst2, comp, snr), d = mean(BenchMethod::Sst1, comp, snr);
            const bool ok = a > b && b > c && c > d;
            order = order && ok;
            detail += fmt("\n      (a) phi'%zu %+.0f dB: sst-qstft %.2f > rm %.2f > sst2 %.2f > sst1 %.2f  %s", comp + 1,
                          snr, a, b, c, d, ok ? "ok" : "VIOLATED");
        }
    }
    const double ratio = mean(BenchMethod::SstQstft, 0, -6.0) / mean(BenchMethod::Sst1, 0, -6.0);
    const bool ratio_ok = ratio >= 2.5;
    detail += fmt("\n      (b) phi'1 -6 dB sst-qstft / sst1 = %.2f (need >= 2.5)  %s", ratio, ratio_ok ? "ok" : "VIOLATED");

    bool cells_ok = true;
    std::size_t outside = 0;
    for (const auto& [m, table] : ref) {
        for (std::size_t comp = 0; comp < 4; ++comp) {
            for (std::size_t si = 0; si < 3; ++si) {
                const double got = mean(m, comp, snrs[si]);
                const double want = table[comp][si];
                const double rel = (got - want) / want;
                const bool ok = std::abs(rel) <= 0.4;
                if (!ok) {
                    cells_ok = false;
                    ++outside;
                }
                detail += fmt("\n      (c) %-9s phi'%zu %+3.0f dB: %6.2f vs %5.1f  %+6.1f%%%s", to_string(m).c_str(), comp + 1,
                              snrs[si], got, want, 100.0 * rel, ok ? "" : "  OUTSIDE +-40%");
            }
        }
    }
    detail = fmt("%zu seeds; (a) %s, (b) %s, (c) %zu of 48 cells outside +-40%%", cfg.seeds.size(), order ? "holds" : "fails",
                 ratio_ok ? "holds" : "fails", outside) +
             detail;
    return {order && ratio_ok && cells_ok, detail};
}

// 8. second-order frequency on a steep chirp
Outcome second_order_gain() {
    const double fs = 44100.0;
    ComponentSpec c;
    c.offset_hz = 5000.0;
    c.chirp_rate = 2000.0;
    const auto x = synth_components({c}, 5.0, fs, false);
    const auto g = make_window(WindowKind::Hann, 4000, 4096, true);
    SecondOrderOptions opts;
    opts.center_index = g.center();
    const auto f = second_order_fields(x, g, 250, 0.0, opts);

    std::vector<double> energy;
    for (const auto& v : f.v.values()) energy.push_back(std::norm(v));
    std::vector<double> sorted = energy;
    const auto cut = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() * 9 / 10);
    std::nth_element(sorted.begin(), cut, sorted.end());
    const double threshold = *cut;

    double e1 = 0.0, e2 = 0.0;
    std::size_t count = 0;
    for (std::size_t n = 0; n < f.v.frames(); ++n) {
        const double truth = c.inst_freq((static_cast<double>(n * 250) + g.center()) / fs);
        for (std::size_t k = 0; k < f.v.bins(); ++k) {
            if (energy[n * f.v.bins() + k] < threshold || !f.xi.defined(n, k) || !f.xi2.defined(n, k)) continue;
            e1 += std::abs(f.xi(n, k) - truth);
            e2 += std::abs(f.xi2(n, k) - truth);
            ++count;
        }
    }
    e1 /= static_cast<double>(count);
    e2 /= static_cast<double>(count);
    const double ratio = e2 / e1;
    return {ratio <= 0.2, fmt("top-decile bins %zu: mean |xi - IF| %.3f Hz, |xi2 - IF| %.3f Hz, ratio %.3f (need <= 0.2)",
                              count, e1, e2, ratio)};
}

// 9. window selection on the noiseless crossing chirps
Outcome window_selection() {
    const auto spec = crossing_chirps();
    const auto x = synth_components(spec);
    BenchConfig cfg;
    const auto fam = cfg.family();
    const auto per = family_stfts(x, fam);
    const auto grid = make_supertile_grid(fam, per.front().frames(), x.fs, cfg.tile_a, cfg.tile_b);
    const auto a1 = algorithm1(per, grid, cfg.alpha);
    const auto a2 = algorithm2(per, grid, cfg.alpha, cfg.perturbation);
    const double center = fam.windows.front().center();

    bool modal_ok = true;
    std::size_t miss1 = 0, miss2 = 0;
    std::string detail;
    for (std::size_t m = 0; m < spec.components.size(); ++m) {
        const auto& comp = spec.components[m];
        std::size_t nearest = 0;
        for (std::size_t w = 1; w < fam.size(); ++w) {
            if (std::abs(fam.windows[w].chirp_rate - comp.chirp_rate) < std::abs(fam.windows[nearest].chirp_rate - comp.chirp_rate)) {
                nearest = w;
            }
        }
        std::set<std::pair<std::size_t, std::size_t>> tiles;
        for (std::size_t n = 0; n < grid.frames; ++n) {
            const double t = (static_cast<double>(n * fam.hop) + center) / x.fs;
            if (t > spec.duration) break;
            tiles.insert({grid.time_tile_of(n), grid.freq_tile_of_hz(comp.inst_freq(t))});
        }
        std::vector<std::size_t> votes1(fam.size(), 0), votes2(fam.size(), 0);
        for (const auto& [r, s] : tiles) {
            ++votes1[a1.at(r, s)];
            ++votes2[a2.at(r, s)];
        }
        const auto modal = [](const std::vector<std::size_t>& v) {
            return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
        };
        miss1 += tiles.size() - votes1[nearest];
        miss2 += tiles.size() - votes2[nearest];
        const bool ok = modal(votes2) == nearest;
        modal_ok = modal_ok && ok;
        detail += fmt("\n      phi'%zu (sigma %+.0f): %zu tiles, nearest window %zu; modal alg2 %zu, alg1 %zu%s", m + 1,
                      comp.chirp_rate, tiles.size(), nearest, modal(votes2), modal(votes1), ok ? "" : "  WRONG");
    }
    const bool ok = modal_ok && miss2 <= miss1;
    return {ok, fmt("mismatched ridge tiles: algorithm 2 %zu, algorithm 1 %zu", miss2, miss1) + detail};
}

// 10. two-tone mode reconstruction
Outcome mode_reconstruction() {
    const double fs = 8000.0;
    ComponentSpec a, b;
    a.offset_hz = 1000.0;
    b.offset_hz = 2500.0;
    b.amplitude = 0.7;
    const auto xa = synth_components({a}, 2.0, fs, true);
    const auto xb = synth_components({b}, 2.0, fs, true);
    DiscreteSignal x = xa;
    for (std::size_t i = 0; i < x.size(); ++i) x.samples[i] += xb.samples[i];

    QuiltedFamily fam;
    fam.hop = 64;
    fam.windows = {make_window(WindowKind::Hann, 512, 512, true), make_window(WindowKind::Hann, 256, 512, true)};
    auto per = family_stfts(x, fam);
    const auto grid = make_supertile_grid(fam, per.front().frames(), fs, 24, 24);
    const auto assignment = algorithm2(per, grid, 0.5, PerturbationSpec{});
    const auto q = qstft(std::move(per), fam, assignment);
    const auto s = sst<SstMode::Magnitude>(q, family_stfts(shift(x, 1), fam), 0.0, 2048, true);
    const auto ridges = extract_ridge(s.matrix, 2);
    if (ridges.curves.size() != 2) return {false, "ridge extraction found fewer than two curves"};

    const std::size_t lo = fam.max_fft_size(), hi = x.size() - fam.max_fft_size();
    auto corr = [&](const DiscreteSignal& r, const DiscreteSignal& t) {
        double dot = 0.0, nr = 0.0, nt = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            dot += r.samples[i].real() * t.samples[i].real();
            nr += std::norm(r.samples[i].real());
            nt += std::norm(t.samples[i].real());
        }
        return dot / std::sqrt(nr * nt);
    };
    bool ok = true;
    std::string detail = fmt("interior samples [%zu, %zu):", lo, hi);
    for (std::size_t m = 0; m < 2; ++m) {
        const auto rec = reconstruct_mode(q, s.inverse, ridges.curves[m], 4, true);
        const double ca = corr(rec.output.signal, xa), cb = corr(rec.output.signal, xb);
        const bool own_a = std::abs(ca) >= std::abs(cb);
        const double own = own_a ? ca : cb, cross = std::abs(own_a ? cb : ca);
        ok = ok && own > 0.99 && cross < 0.05;
        detail += fmt(" mode %zu -> %s tone corr %.6f, cross %.1e;", m + 1, own_a ? "1000 Hz" : "2500 Hz", own, cross);
    }
    return {ok, detail};
}

struct Criterion {
    int id;
    const char* name;
    double time_limit_s;  // <= 0: no limit
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {1, "constant-frequency exactness", 5.0, tone_frequency},
        {2, "spike time exactness", 5.0, spike_time},
        {3, "brute-force oracle equivalence", 10.0, brute_force},
        {4, "energy conservation", 30.0, energy_conservation},
        {5, "perfect reconstruction", 5.0, perfect_reconstruction},
        {6, "algorithm equivalence", 60.0, algorithm_equivalence},
        {7, "crossing-chirp ridge energy table", 0.0, ridge_energy_table},
        {8, "second-order improvement", 60.0, second_order_gain},
        {9, "window-selection sanity", 120.0, window_selection},
        {10, "mode reconstruction", 30.0, mode_reconstruction},
    };
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

    int failed = 0;
    for (const auto& c : all) {
        if (!wanted.empty() && !wanted.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = c.time_limit_s <= 0.0 || secs < c.time_limit_s;
        const bool pass = o.pass && in_time;
        failed += pass ? 0 : 1;
        std::printf("%s criterion %d: %s (%.1f s%s) %s\n", pass ? "PASS" : "FAIL", c.id, c.name, secs,
                    in_time ? "" : ", over time limit", o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
