// Crossing chirps: plain SST-STFT against SST-QSTFT with four chirped Hann windows.
// Writes PGM images and the window color map into the directory given as argv[1]
// (default: current directory) and prints the ridge energy of each component.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "qsst/qsst.hpp"

using namespace qsst;

int main(int argc, char** argv) {
    const std::filesystem::path out = argc > 1 ? argv[1] : ".";
    std::filesystem::create_directories(out);

    const SignalSpec spec = crossing_chirps();
    const DiscreteSignal x = add_noise(synth_components(spec), 0.0, 7);

    const std::size_t hop = 250, K = 16384;
    const WindowSpec h0 = make_window(WindowKind::Hann, 4000, 4096, true);
    QuiltedFamily fam;
    fam.hop = hop;
    for (double s : {1900.0, 900.0, -900.0, -1900.0}) fam.windows.push_back(chirp_window(h0, s, x.fs));

    // plain SST with the unchirped window
    const std::size_t frames = frame_count(x.size(), h0.fft_size(), hop);
    const auto v = stft(x, h0, hop, frames);
    const auto xi = reassign_freq(v, stft(shift(x, 1), h0, hop, frames));
    const auto plain = sst_stft<SstMode::Magnitude>(v, xi, K);

    // quilted
    auto per_window = family_stfts(x, fam);
    const auto grid = make_supertile_grid(fam, per_window.front().frames(), x.fs, 24, 24);
    const auto assignment = algorithm2(per_window, grid, 0.5, PerturbationSpec{});
    const auto q = qstft(std::move(per_window), fam, assignment);
    const auto quilted = sst<SstMode::Magnitude>(q, family_stfts(shift(x, 1), fam), 0.0, K, false);

    const auto ifs = frame_true_ifs(spec, frames, hop, h0.center());
    std::printf("component   sst-stft %%   sst-qstft %%\n");
    for (std::size_t m = 0; m < spec.components.size(); ++m) {
        std::printf("phi'%zu       %8.2f     %8.2f\n", m + 1, ridge_energy(plain.matrix, ifs[m], 1, {5000, 15000}),
                    ridge_energy(quilted.matrix, ifs[m], 1, {5000, 15000}));
    }

    std::ofstream a(out / "sst_stft.pgm", std::ios::binary);
    write_pgm(a, plain.matrix);
    std::ofstream b(out / "sst_qstft.pgm", std::ios::binary);
    write_pgm(b, quilted.matrix);
    std::ofstream c(out / "windows.csv");
    for (const auto& row : color_index_matrix(assignment)) {
        for (std::size_t i = 0; i < row.size(); ++i) c << (i ? "," : "") << row[i];
        c << '\n';
    }
    std::cout << "images in " << out.string() << '\n';
    return 0;
}
