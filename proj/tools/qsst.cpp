// qsst command-line front end: synth, analyze, reconstruct, bench.
// Exit codes: 0 ok, 2 usage/input error, 3 data-format error, 4 numeric failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qsst/qsst.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qsst;

namespace {

json load_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open '" + path + "'");
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        throw FormatError("'" + path + "': " + e.what());
    }
}

void save_json(const std::string& path, const json& j) {
    std::ofstream f(path);
    if (!f) throw InputError("cannot write '" + path + "'");
    f << j.dump(2) << '\n';
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write '" + path + "'");
    return f;
}

// Knobs shared by the commands. Flags win over --config values, which win over defaults.
struct Flags {
    std::optional<double> fs;
    std::optional<std::size_t> hop, fft_size, kbins, tile_a, tile_b, t_step, y_step, t_shift, y_shift;
    std::optional<double> alpha, gamma, snr;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> dirs;
    std::optional<int> algorithm;
    std::string config;

    void add_to(CLI::App* app, bool transform_knobs) {
        app->add_option("--config", config, "JSON file with parameter defaults")->check(CLI::ExistingFile);
        if (!transform_knobs) return;
        app->add_option("--hop", hop, "hop size H (samples)");
        app->add_option("--fft-size", fft_size, "FFT size of the default window");
        app->add_option("--kbins", kbins, "SST output bins K");
        app->add_option("--alpha", alpha, "Renyi entropy order");
        app->add_option("--tile-a", tile_a, "supertile frames A");
        app->add_option("--tile-b", tile_b, "supertile coarse bins B");
        app->add_option("--t-step", t_step, "time step of the perturbed boxes (frames)");
        app->add_option("--y-step", y_step, "frequency step of the perturbed boxes (coarse bins)");
        app->add_option("--t-shift", t_shift, "number of time translates per direction");
        app->add_option("--y-shift", y_shift, "number of frequency translates per direction");
        app->add_option("--dirs", dirs, "perturbation directions")->check(CLI::IsMember({"back", "fwd", "both"}));
        app->add_option("--gamma", gamma, "magnitude tolerance");
        app->add_option("--algorithm", algorithm, "window selection algorithm")->check(CLI::IsMember({1, 2}));
    }
};

template <class T>
T pick(const std::optional<T>& flag, const json& cfg, const char* key, T fallback) {
    if (flag) return *flag;
    if (cfg.is_object() && cfg.contains(key)) {
        try {
            return cfg.at(key).get<T>();
        } catch (const json::exception& e) {
            throw FormatError(std::string("config key '") + key + "': " + e.what());
        }
    }
    return fallback;
}

std::vector<int> dirs_of(const std::string& d) {
    if (d == "back") return {-1};
    if (d == "fwd") return {1};
    if (d == "both") return {-1, 1};
    throw InputError("--dirs must be back, fwd or both");
}

PerturbationSpec perturbation_of(const Flags& f, const json& cfg) {
    PerturbationSpec p;
    p.t_step = pick(f.t_step, cfg, "t_step", p.t_step);
    p.y_step = pick(f.y_step, cfg, "y_step", p.y_step);
    p.t_shift = pick(f.t_shift, cfg, "t_shift", p.t_shift);
    p.y_shift = pick(f.y_shift, cfg, "y_shift", p.y_shift);
    const auto d = dirs_of(pick(f.dirs, cfg, "dirs", std::string("both")));
    p.t_dirs = d;
    p.y_dirs = d;
    p.validate();
    return p;
}

std::string strip_wav(const std::string& path) {
    if (path.size() > 4 && path.compare(path.size() - 4, 4, ".wav") == 0) return path.substr(0, path.size() - 4);
    return path;
}

// synth -------------------------------------------------------------------------

struct SynthArgs {
    std::string spec;
    std::string out;
    std::size_t frame_fft = 4096;
};

int cmd_synth(const SynthArgs& a, const Flags& f) {
    const json cfg = f.config.empty() ? json::object() : load_json(f.config);
    json sj = load_json(a.spec);
    SignalSpec spec;
    try {
        spec = signal_spec_from_json(sj);
    } catch (const json::exception& e) {
        throw FormatError("signal spec: " + std::string(e.what()));
    }
    if (f.fs) {
        spec.fs = *f.fs;
        for (auto& c : spec.components) c.samples_fs = spec.fs;
    }
    DiscreteSignal x = synth_components(spec);
    const double snr = f.snr ? *f.snr : cfg.value("snr", std::numeric_limits<double>::quiet_NaN());
    const std::uint64_t seed = pick(f.seed, cfg, "seed", std::uint64_t{1});
    if (!std::isnan(snr)) x = add_noise(x, snr, seed);

    std::ofstream wav = open_out(a.out);
    write_wav(wav, x);

    // Per-frame IF table at frame start times nH dt.
    const std::size_t hop = pick(f.hop, cfg, "hop", std::size_t{250});
    const std::size_t fft = pick(f.fft_size, cfg, "fft_size", a.frame_fft);
    const std::size_t frames = frame_count(x.size(), fft, hop);
    json ifs = json::array();
    for (const auto& c : spec.components) {
        std::vector<double> col(frames);
        for (std::size_t n = 0; n < frames; ++n) col[n] = c.inst_freq(static_cast<double>(n * hop) / spec.fs);
        ifs.push_back(col);
    }
    json side{{"fs", spec.fs},
              {"samples", x.size()},
              {"hop", hop},
              {"frames", frames},
              {"snr_db", std::isnan(snr) ? json(nullptr) : json(snr)},
              {"seed", seed},
              {"signal", to_json(spec)},
              {"if_hz", ifs}};
    save_json(strip_wav(a.out) + ".if.json", side);
    std::cerr << "wrote " << a.out << " (" << x.size() << " samples at " << spec.fs << " Hz)\n";
    return 0;
}

// analyze -----------------------------------------------------------------------

struct AnalyzeArgs {
    std::string in;
    std::string family;
    std::string prefix;
    std::size_t window_length = 0;
    std::vector<double> chirp_rates;
};

std::string window_file(const std::string& prefix, std::size_t w) {
    return prefix + ".qstft.w" + std::to_string(w) + ".tfm";
}

int cmd_analyze(const AnalyzeArgs& a, const Flags& f) {
    const json cfg = f.config.empty() ? json::object() : load_json(f.config);
    const WavData wav = read_wav(a.in);
    if (wav.channels_discarded) {
        std::cerr << "warning: " << a.in << " has " << wav.info.channels << " channels; using the first\n";
    }
    const DiscreteSignal& x = wav.signal;
    x.validate();

    QuiltedFamily fam;
    const std::string fam_path = !a.family.empty() ? a.family : cfg.value("family", std::string{});
    if (!fam_path.empty()) {
        const json fj = load_json(fam_path);
        try {
            fam = family_from_json(fj, x.fs);
        } catch (const json::exception& e) {
            throw FormatError("family spec: " + std::string(e.what()));
        }
        if (f.hop) fam.hop = *f.hop;
    } else {
        const std::size_t fft = pick(f.fft_size, cfg, "fft_size", std::size_t{4096});
        const std::size_t len = a.window_length > 0 ? a.window_length : cfg.value("window_length", fft);
        const WindowSpec base = make_window(WindowKind::Hann, len, fft, true);
        std::vector<double> rates = a.chirp_rates;
        if (rates.empty()) rates = cfg.value("chirp_rates", std::vector<double>{0.0});
        for (double s : rates) fam.windows.push_back(chirp_window(base, s, x.fs));
        fam.hop = pick(f.hop, cfg, "hop", std::size_t{250});
    }
    fam.validate();

    const std::size_t kbins = pick(f.kbins, cfg, "kbins", 4 * fam.max_fft_size());
    const double alpha = pick(f.alpha, cfg, "alpha", 0.5);
    const double gamma = pick(f.gamma, cfg, "gamma", 0.0);
    const std::size_t tile_a = pick(f.tile_a, cfg, "tile_a", std::size_t{24});
    const std::size_t tile_b = pick(f.tile_b, cfg, "tile_b", std::size_t{24});
    const int algorithm = pick(f.algorithm, cfg, "algorithm", 2);
    const PerturbationSpec pert = perturbation_of(f, cfg);
    detail::require(kbins >= fam.max_fft_size(), "--kbins must be >= the largest FFT size");
    detail::require(alpha > 0.0 && alpha < 1.0, "--alpha must lie in (0, 1)");
    detail::require(gamma >= 0.0, "--gamma must be >= 0");
    detail::require(tile_a >= 1 && tile_b >= 1, "--tile-a and --tile-b must be >= 1");
    detail::require(algorithm == 1 || algorithm == 2, "--algorithm must be 1 or 2");

    auto per_window = family_stfts(x, fam);
    const auto grid = make_supertile_grid(fam, per_window.front().frames(), x.fs, tile_a, tile_b);
    const TileAssignment assignment =
        algorithm == 1 ? algorithm1(per_window, grid, alpha) : algorithm2(per_window, grid, alpha, pert);
    const QstftResult q = qstft(std::move(per_window), fam, assignment);
    const auto xi = qstft_reassign_freq(q, family_stfts(shift(x, 1), fam), gamma);
    const auto s = sst<SstMode::Magnitude>(q, xi, kbins, true);
    for (const auto& row : s.matrix.values()) {
        if (!std::isfinite(row)) throw NumericError("analyze: non-finite SST output");
    }

    const std::string& p = a.prefix;
    for (std::size_t w = 0; w < fam.size(); ++w) {
        auto os = open_out(window_file(p, w));
        write_tfmatrix(os, q.per_window[w], json{{"window_index", w}});
    }
    {
        auto os = open_out(p + ".sst.tfm");
        write_tfmatrix(os, s.matrix, json{{"dropped_bins", s.dropped}});
    }
    {
        auto os = open_out(p + ".invmap.tfm");
        write_inverse_map(os, s.inverse);
    }
    save_json(p + ".assignment.json", to_json(assignment));
    {
        json windows = json::array();
        for (const auto& w : fam.windows) windows.push_back(to_json(w, x.fs));
        save_json(p + ".family.json", json{{"hop", fam.hop}, {"windows", windows}});
    }
    {
        std::ofstream os(p + ".colors.csv");
        for (const auto& row : color_index_matrix(assignment)) {
            for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
            os << '\n';
        }
    }
    {
        auto os = open_out(p + ".sst.pgm");
        write_pgm(os, s.matrix);
    }
    {
        // active quilted plane drawn on the largest FFT grid
        const std::size_t Lmax = fam.max_fft_size();
        auto os = open_out(p + ".qstft.pgm");
        write_pgm(os, q.frames(), Lmax, Lmax / 2 + 1, [&](std::size_t n, std::size_t k) {
            const std::size_t w = assignment.window_for(n, k, Lmax);
            const std::size_t L = q.per_window[w].bins();
            return std::norm(q.per_window[w](n, k * L / Lmax));
        });
    }
    json manifest{{"input", a.in},
                  {"fs", x.fs},
                  {"samples", x.size()},
                  {"real_input", x.is_real()},
                  {"windows", fam.size()},
                  {"hop", fam.hop},
                  {"kbins", kbins},
                  {"frames", q.frames()},
                  {"alpha", alpha},
                  {"gamma", gamma},
                  {"algorithm", algorithm},
                  {"tile_a", tile_a},
                  {"tile_b", tile_b},
                  {"dropped_bins", s.dropped}};
    save_json(p + ".analysis.json", manifest);
    std::cerr << "analyzed " << a.in << ": " << q.frames() << " frames, " << fam.size() << " windows, K = " << kbins
              << "\n";
    return 0;
}

// reconstruct -------------------------------------------------------------------

struct ReconstructArgs {
    std::string prefix;
    std::size_t modes = 1;
    std::string out;
    std::size_t halo = 4;
    std::size_t jump_max = 8;
};

int cmd_reconstruct(const ReconstructArgs& a) {
    if (a.modes == 0) return 0;
    const json manifest = load_json(a.prefix + ".analysis.json");
    const json fj = load_json(a.prefix + ".family.json");
    QuiltedFamily fam;
    TileAssignment assignment;
    bool real_input = true;
    try {
        fam.hop = fj.at("hop").get<std::size_t>();
        for (const auto& w : fj.at("windows")) fam.windows.push_back(window_from_json(w));
        assignment = tile_assignment_from_json(load_json(a.prefix + ".assignment.json"));
        real_input = manifest.at("real_input").get<bool>();
    } catch (const json::exception& e) {
        throw FormatError("analysis files: " + std::string(e.what()));
    }
    std::vector<StftMatrix> per_window;
    for (std::size_t w = 0; w < fam.size(); ++w) per_window.push_back(load_tfmatrix<cplx>(window_file(a.prefix, w)));
    const EnergyMatrix s = load_tfmatrix<double>(a.prefix + ".sst.tfm");
    InverseMap inv;
    {
        std::ifstream is(a.prefix + ".invmap.tfm", std::ios::binary);
        if (!is) throw InputError("cannot open '" + a.prefix + ".invmap.tfm'");
        inv = read_inverse_map(is);
    }
    const QstftResult q = qstft(std::move(per_window), fam, assignment);

    RidgeOptions ro;
    ro.jump_max = a.jump_max;
    const auto found = extract_ridge(s, a.modes, ro);
    if (found.incomplete) {
        std::cerr << "warning: only " << found.curves.size() << " of " << a.modes << " ridges found\n";
    }
    const std::string stem = strip_wav(a.out);
    for (std::size_t m = 0; m < found.curves.size(); ++m) {
        const auto mode = reconstruct_mode(q, inv, found.curves[m], a.halo, real_input);
        const std::string base = stem + ".mode" + std::to_string(m + 1);
        auto os = open_out(base + ".wav");
        write_wav(os, mode.output.signal);
        std::ofstream csv(base + ".ridge.csv");
        write_ridge_csv(csv, found.curves[m], fam.hop, s.fs(), s.bins());
        std::cerr << "mode " << m + 1 << ": frames " << found.curves[m].first_frame << ".."
                  << found.curves[m].first_frame + found.curves[m].length() << ", straddled " << mode.straddled_frames
                  << " -> " << base << ".wav\n";
    }
    return 0;
}

// bench -------------------------------------------------------------------------

struct BenchArgs {
    std::string out_dir = ".";
    std::vector<std::string> methods;
    std::size_t seeds = 0;
    bool quiet = false;
};

int cmd_bench(const BenchArgs& a, const Flags& f) {
    BenchConfig c = f.config.empty() ? BenchConfig{} : bench_config_from_json(load_json(f.config));
    if (f.hop) c.hop = *f.hop;
    if (f.kbins) c.kbins = *f.kbins;
    if (f.alpha) c.alpha = *f.alpha;
    if (f.gamma) c.gamma = *f.gamma;
    if (f.tile_a) c.tile_a = *f.tile_a;
    if (f.tile_b) c.tile_b = *f.tile_b;
    if (f.algorithm) c.algorithm = *f.algorithm;
    if (f.fft_size) c.window.fft_size = *f.fft_size;
    if (f.t_step) c.perturbation.t_step = *f.t_step;
    if (f.y_step) c.perturbation.y_step = *f.y_step;
    if (f.t_shift) c.perturbation.t_shift = *f.t_shift;
    if (f.y_shift) c.perturbation.y_shift = *f.y_shift;
    if (f.dirs) c.perturbation.t_dirs = c.perturbation.y_dirs = dirs_of(*f.dirs);
    if (f.snr) c.snrs = {*f.snr};
    if (f.seed) c.seeds = {*f.seed};
    if (a.seeds > 0) {
        c.seeds.clear();
        for (std::size_t i = 1; i <= a.seeds; ++i) c.seeds.push_back(i);
    }
    if (!a.methods.empty()) {
        c.methods.clear();
        for (const auto& m : a.methods) c.methods.push_back(bench_method_from_string(m));
    }
    c.validate();

    fs::create_directories(a.out_dir);
    const auto report = run_bench(c, a.quiet ? nullptr : std::function<void(const std::string&)>([](const std::string& s) {
        std::cerr << s << '\n';
    }));
    {
        std::ofstream csv((fs::path(a.out_dir) / "bench.csv").string());
        write_bench_csv(csv, report);
    }
    const std::string table = format_bench_table(report);
    {
        std::ofstream txt((fs::path(a.out_dir) / "bench.txt").string());
        txt << table;
    }
    save_json((fs::path(a.out_dir) / "bench.json").string(), to_json(report));
    std::cout << table;
    for (const auto& d : report.diagnostics) std::cerr << "diagnostic: " << d << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quilted STFT synchrosqueezing toolkit"};
    app.require_subcommand(1);

    Flags synth_flags, analyze_flags, bench_flags;

    SynthArgs sa;
    auto* synth = app.add_subcommand("synth", "synthesize a signal from a component spec");
    synth->add_option("spec", sa.spec, "signal spec JSON")->required();
    synth->add_option("-o,--out", sa.out, "output WAV")->required();
    synth->add_option("--fs", synth_flags.fs, "override the spec's sample rate");
    synth->add_option("--snr", synth_flags.snr, "add white Gaussian noise at this SNR (dB)");
    synth->add_option("--seed", synth_flags.seed, "noise seed");
    synth->add_option("--hop", synth_flags.hop, "hop of the IF sidecar table");
    synth->add_option("--fft-size", synth_flags.fft_size, "frame length of the IF sidecar table");
    synth_flags.add_to(synth, false);

    AnalyzeArgs aa;
    auto* analyze = app.add_subcommand("analyze", "QSTFT, window selection and SST-QSTFT of a WAV file");
    analyze->add_option("input", aa.in, "input WAV")->required();
    analyze->add_option("-o,--out", aa.prefix, "output prefix")->required();
    analyze->add_option("--family", aa.family, "window family JSON");
    analyze->add_option("--window-length", aa.window_length, "native length of the default Hann window");
    analyze->add_option("--chirp-rates", aa.chirp_rates, "chirp rates of the default family (Hz/s)");
    analyze_flags.add_to(analyze, true);

    ReconstructArgs ra;
    auto* reconstruct = app.add_subcommand("reconstruct", "extract ridges and resynthesize modes");
    reconstruct->add_option("prefix", ra.prefix, "analysis prefix")->required();
    reconstruct->add_option("-M,--modes", ra.modes, "number of modes");
    reconstruct->add_option("-o,--out", ra.out, "output WAV stem")->required();
    reconstruct->add_option("--halo", ra.halo, "K-bins around the ridge kept per frame");
    reconstruct->add_option("--jump-max", ra.jump_max, "largest ridge step between frames (K-bins)");

    BenchArgs ba;
    auto* bench = app.add_subcommand("bench", "ridge-energy comparison on the crossing chirps");
    bench->add_option("-o,--out", ba.out_dir, "output directory");
    bench->add_option("--methods", ba.methods, "subset of sst1, sst2, rm, sst-qstft");
    bench->add_option("--seeds", ba.seeds, "use seeds 1..N");
    bench->add_option("--snr", bench_flags.snr, "single SNR (dB)");
    bench->add_option("--seed", bench_flags.seed, "single seed");
    bench->add_flag("-q,--quiet", ba.quiet, "no progress output");
    bench_flags.add_to(bench, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*synth) return cmd_synth(sa, synth_flags);
        if (*analyze) return cmd_analyze(aa, analyze_flags);
        if (*reconstruct) return cmd_reconstruct(ra);
        if (*bench) return cmd_bench(ba, bench_flags);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << '\n';
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
