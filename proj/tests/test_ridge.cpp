#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "qsst/qsst.hpp"

using namespace qsst;
using Catch::Approx;

namespace {

EnergyMatrix random_energy(std::size_t frames, std::size_t bins, double fs, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> d;
    EnergyMatrix m(frames, bins, 1, fs, TfKind::Energy, "test");
    for (auto& v : m.values()) v = d(rng);
    return m;
}

double correlation(const std::vector<cplx>& a, const std::vector<cplx>& b, std::size_t lo, std::size_t hi) {
    cplx dot{};
    double na = 0.0, nb = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
        dot += a[i] * std::conj(b[i]);
        na += std::norm(a[i]);
        nb += std::norm(b[i]);
    }
    return std::abs(dot) / std::sqrt(na * nb);
}

struct Analysis {
    QstftResult q;
    SstResult<double> s;
};

// single Hann window, magnitude SST with the inverse map
Analysis analyze(const DiscreteSignal& x, std::size_t L, std::size_t hop, std::size_t K) {
    QuiltedFamily fam;
    fam.hop = hop;
    fam.windows = {make_window(WindowKind::Hann, L, L, true)};
    auto per = family_stfts(x, fam);
    const auto grid = make_supertile_grid(fam, per.front().frames(), x.fs, 8, 8);
    auto q = qstft(std::move(per), fam, TileAssignment::constant(grid, 1, 0));
    auto s = sst<SstMode::Magnitude>(q, family_stfts(shift(x, 1), fam), 1e-8, K, true);
    return {std::move(q), std::move(s)};
}

}  // namespace

TEST_CASE("ridge bin range", "[ridge]") {
    // frequency at 10.3 bins
    const double fs = 1000.0;
    const std::size_t K = 100;
    CHECK(ridge_bin_range(103.0, K, fs, 0) == std::pair<std::int64_t, std::int64_t>{10, 11});
    CHECK(ridge_bin_range(103.0, K, fs, 1) == std::pair<std::int64_t, std::int64_t>{9, 12});
    // exactly half way: the lower bin is out, the upper one in
    CHECK(ridge_bin_range(105.0, K, fs, 0) == std::pair<std::int64_t, std::int64_t>{11, 12});
    CHECK(ridge_bin_range(0.0, K, fs, 1).first == -1);
}

TEST_CASE("ridge energy", "[ridge]") {
    const double fs = 1000.0;
    const std::size_t N = 20, K = 200;
    std::vector<double> ifs(N);
    for (std::size_t n = 0; n < N; ++n) ifs[n] = 100.0 + 10.0 * static_cast<double>(n);

    SECTION("all energy on the ridge gives 100") {
        EnergyMatrix m(N, K, 1, fs, TfKind::Energy, "");
        for (std::size_t n = 0; n < N; ++n) m(n, static_cast<std::size_t>(std::llround(ifs[n] * K / fs))) = 1.0 + n;
        CHECK(ridge_energy(m, ifs, 0, {0.0, 500.0}) == Approx(100.0));
        CHECK(ridge_set(m, ifs, 0).members.size() == N);
        CHECK(ridge_set(m, ifs, 1).members.size() == 3 * N);
    }
    SECTION("wider ridges hold more") {
        const auto m = random_energy(N, K, fs, 1);
        const double q0 = ridge_energy(m, ifs, 0, {0.0, 500.0});
        const double q1 = ridge_energy(m, ifs, 1, {0.0, 500.0});
        const double q3 = ridge_energy(m, ifs, 3, {0.0, 500.0});
        CHECK(q0 > 0.0);
        CHECK(q1 >= q0);
        CHECK(q3 >= q1);
        CHECK(q3 <= 100.0);
    }
    SECTION("independent of scale") {
        auto m = random_energy(N, K, fs, 2);
        const double a = ridge_energy(m, ifs, 1, {50.0, 450.0});
        for (auto& v : m.values()) v *= 1e6;
        CHECK(ridge_energy(m, ifs, 1, {50.0, 450.0}) == Approx(a).epsilon(1e-12));
    }
    SECTION("NaN frames add no ridge energy but count in the total") {
        auto m = random_energy(N, K, fs, 3);
        auto partial = ifs;
        partial[5] = std::numeric_limits<double>::quiet_NaN();
        CHECK(ridge_energy(m, partial, 1, {0.0, 500.0}) < ridge_energy(m, ifs, 1, {0.0, 500.0}));
    }
    SECTION("bad arguments") {
        const auto m = random_energy(N, K, fs, 4);
        CHECK_THROWS_AS(ridge_energy(m, ifs, 1, {300.0, 200.0}), InputError);
        CHECK_THROWS_AS(ridge_energy(m, ifs, 1, {1.0, 2.0}), InputError);
        CHECK_THROWS_AS(ridge_energy(m, std::vector<double>(N - 1, 1.0), 1, {0.0, 500.0}), InputError);
        EnergyMatrix zero(N, K, 1, fs, TfKind::Energy, "");
        CHECK(ridge_energy(zero, ifs, 1, {0.0, 500.0}) == 0.0);
    }
}

TEST_CASE("ridge extraction", "[ridge]") {
    const std::size_t N = 50, K = 256;
    SECTION("one clean line") {
        EnergyMatrix m(N, K, 1, 1000.0, TfKind::Energy, "");
        for (std::size_t n = 0; n < N; ++n) m(n, 40 + n / 5) = 10.0;
        const auto r = extract_ridge(m, 1);
        REQUIRE(r.curves.size() == 1);
        CHECK_FALSE(r.incomplete);
        const auto& c = r.curves.front();
        CHECK(c.first_frame == 0);
        REQUIRE(c.length() == N);
        for (std::size_t n = 0; n < N; ++n) CHECK(c.bin_at(n) == 40 + n / 5);
    }
    SECTION("two lines, strongest first, then nothing left") {
        EnergyMatrix m(N, K, 1, 1000.0, TfKind::Energy, "");
        for (std::size_t n = 0; n < N; ++n) {
            m(n, 30) = 1.0;
            m(n, 150) = 5.0;
        }
        const auto r = extract_ridge(m, 3);
        REQUIRE(r.curves.size() == 2);
        CHECK(r.incomplete);
        CHECK(r.curves[0].bins.front() == 150);
        CHECK(r.curves[1].bins.back() == 30);
    }
    SECTION("a short line is truncated where it fades") {
        EnergyMatrix m(N, K, 1, 1000.0, TfKind::Energy, "");
        for (std::size_t n = 10; n < 30; ++n) m(n, 100) = 1.0;
        const auto r = extract_ridge(m, 1);
        REQUIRE(r.curves.size() == 1);
        CHECK(r.curves[0].first_frame == 10);
        CHECK(r.curves[0].length() == 20);
        CHECK(r.curves[0].covers(29));
        CHECK_FALSE(r.curves[0].covers(30));
    }
    SECTION("matrices tagged as STFTs are not accepted") {
        CHECK_THROWS_AS(extract_ridge(EnergyMatrix(4, 8, 1, 100.0, TfKind::Stft, ""), 1), InputError);
        CHECK(extract_ridge(EnergyMatrix(4, 8, 1, 100.0, TfKind::Energy, ""), 0).curves.empty());
    }
}

TEST_CASE("mode reconstruction", "[ridge]") {
    const double fs = 8000.0;
    ComponentSpec a, b;
    a.offset_hz = 1000.0;
    b.offset_hz = 2500.0;
    b.amplitude = 0.7;
    const auto xa = synth_components({a}, 1.0, fs, false);
    const auto xb = synth_components({b}, 1.0, fs, false);
    DiscreteSignal x = xa;
    for (std::size_t i = 0; i < x.size(); ++i) x.samples[i] += xb.samples[i];

    const auto an = analyze(x, 512, 64, 2048);
    const auto ridges = extract_ridge(an.s.matrix, 2);
    REQUIRE(ridges.curves.size() == 2);
    const std::size_t lo = 512, hi = x.size() - 512;
    for (std::size_t m = 0; m < 2; ++m) {
        const auto rec = reconstruct_mode(an.q, an.s.inverse, ridges.curves[m]);
        CHECK(rec.straddled_frames == 0);
        const auto& own = m == 0 ? xa : xb;
        const auto& other = m == 0 ? xb : xa;
        CHECK(correlation(rec.output.signal.samples, own.samples, lo, hi) > 0.999);
        CHECK(correlation(rec.output.signal.samples, other.samples, lo, hi) < 0.01);
    }

    SECTION("an empty curve gives silence") {
        const auto rec = reconstruct_mode(an.q, an.s.inverse, RidgeCurve{});
        for (const auto& z : rec.output.signal.samples) REQUIRE(z == cplx{});
    }
    SECTION("mismatched inverse map") {
        InverseMap bad = an.s.inverse;
        bad.frames += 1;
        CHECK_THROWS_AS(reconstruct_mode(an.q, bad, ridges.curves[0]), InputError);
    }
}

TEST_CASE("real tone through the ridge", "[ridge]") {
    const double fs = 8000.0;
    ComponentSpec a;
    a.offset_hz = 1300.0;
    const auto x = synth_components({a}, 0.5, fs, true);
    const auto an = analyze(x, 256, 32, 1024);
    const auto ridges = extract_ridge(an.s.matrix, 1);
    REQUIRE(ridges.curves.size() == 1);
    const double f = static_cast<double>(ridges.curves[0].bins[10]) * fs / 1024.0;
    CHECK(std::abs(f - 1300.0) <= fs / 1024.0);
    const auto rec = reconstruct_mode(an.q, an.s.inverse, ridges.curves[0], 4, true);
    CHECK(rec.output.signal.is_real());
    CHECK(correlation(rec.output.signal.samples, x.samples, 256, x.size() - 256) > 0.99);
}

TEST_CASE("ridge CSV", "[ridge]") {
    RidgeCurve c;
    c.first_frame = 3;
    c.bins = {10, 11};
    c.energy = {1.5, 2.5};
    std::ostringstream os;
    write_ridge_csv(os, c, 100, 1000.0, 200);
    CHECK(os.str() == "frame,time_s,bin,freq_hz,energy\n3,0.3,10,50,1.5\n4,0.4,11,55,2.5\n");
}
