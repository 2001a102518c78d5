#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <sstream>

#include "qsst/qsst.hpp"

using namespace qsst;
using Catch::Approx;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

BenchConfig small_config() {
    BenchConfig c;
    c.signal.fs = 8000.0;
    c.signal.duration = 0.5;
    c.signal.real_valued = true;
    ComponentSpec up, down;
    up.offset_hz = 1000.0;
    up.chirp_rate = 2000.0;
    down.offset_hz = 3000.0;
    down.chirp_rate = -1500.0;
    c.signal.components = {up, down};
    c.window = {WindowKind::Hann, 250, 256, true};
    c.chirp_rates = {2000.0, 0.0, -2000.0};
    c.hop = 32;
    c.kbins = 1024;
    c.tile_a = 8;
    c.tile_b = 8;
    c.perturbation.t_step = 2;
    c.perturbation.y_step = 2;
    c.perturbation.t_shift = 1;
    c.perturbation.y_shift = 1;
    c.band = {500.0, 3500.0};
    c.snrs = {kInf, -6.0};
    c.seeds = {1, 2};
    return c;
}

}  // namespace

TEST_CASE("method names", "[bench]") {
    for (auto m : {BenchMethod::Sst1, BenchMethod::Sst2, BenchMethod::Rm, BenchMethod::SstQstft}) {
        CHECK(bench_method_from_string(to_string(m)) == m);
    }
    CHECK(to_string(BenchMethod::SstQstft) == "sst-qstft");
    CHECK_THROWS_AS(bench_method_from_string("wavelet"), InputError);
}

TEST_CASE("true IFs at window centers", "[bench]") {
    const auto cfg = small_config();
    const auto ifs = frame_true_ifs(cfg.signal, 10, 32, 124.5);
    REQUIRE(ifs.size() == 2);
    REQUIRE(ifs[0].size() == 10);
    CHECK(ifs[0][3] == Approx(1000.0 + 2000.0 * (3 * 32 + 124.5) / 8000.0));
    CHECK(ifs[1][0] == Approx(3000.0 - 1500.0 * 124.5 / 8000.0));
}

TEST_CASE("small benchmark", "[bench]") {
    const auto cfg = small_config();
    std::size_t ticks = 0;
    const auto r = run_bench(cfg, [&](const std::string&) { ++ticks; });
    CHECK(ticks == 2 * 2 * 4);
    CHECK(r.diagnostics.empty());
    REQUIRE(r.cells.size() == 4 * 2 * 2);

    for (auto m : cfg.methods) {
        for (std::size_t comp = 0; comp < 2; ++comp) {
            const auto& clean = r.cell(m, comp, kInf);
            const auto& noisy = r.cell(m, comp, -6.0);
            CHECK(clean.seeds_used == 2);
            // without noise both seeds see the same signal
            CHECK(clean.percents[0] == clean.percents[1]);
            CHECK(clean.stddev == Approx(0.0).margin(1e-12));
            CHECK(noisy.percents[0] != noisy.percents[1]);
            CHECK(clean.mean > noisy.mean);
            CHECK(noisy.mean > 0.0);
            CHECK(clean.mean <= 100.0);
        }
    }
    // reassignment in time and frequency concentrates more than plain squeezing
    CHECK(r.cell(BenchMethod::Rm, 0, kInf).mean > r.cell(BenchMethod::Sst1, 0, kInf).mean);

    SECTION("deterministic") {
        const auto again = run_bench(cfg);
        for (std::size_t i = 0; i < r.cells.size(); ++i) CHECK(again.cells[i].percents == r.cells[i].percents);
    }
    SECTION("outputs") {
        std::ostringstream csv;
        write_bench_csv(csv, r);
        std::istringstream lines(csv.str());
        std::string header;
        std::getline(lines, header);
        CHECK(header == "method,component,snr_db,mean,std,seeds_used,seed_1,seed_2");
        std::size_t rows = 0;
        for (std::string line; std::getline(lines, line);) ++rows;
        CHECK(rows == r.cells.size());

        const auto table = format_bench_table(r);
        CHECK(table.find("sst-qstft") != std::string::npos);
        CHECK(table.find("phi'2 -6 dB") != std::string::npos);

        const auto j = to_json(r);
        CHECK(j.at("cells").size() == r.cells.size());
        CHECK(j.at("cells")[0].at("snr_db") == "inf");
    }
}

TEST_CASE("a signal that cannot be synthesized stops the run", "[bench]") {
    auto cfg = small_config();
    cfg.signal.components = {ComponentSpec{}};
    cfg.signal.components[0].offset_hz = 0.0;  // zero IF cannot be synthesized
    CHECK_THROWS_AS(run_bench(cfg), InputError);
}

TEST_CASE("bench config JSON", "[bench]") {
    const auto c = bench_config_from_json(nlohmann::json::parse(R"({
        "snrs": ["inf", 3], "seeds": [9], "methods": ["rm", "sst2"],
        "window": {"kind": "blackman", "length": 1000, "fft_size": 1024},
        "chirp_rates": [100], "hop": 50, "kbins": 4096, "algorithm": 1,
        "perturbation": {"t_shift": 0, "y_shift": 2, "dirs": [1]},
        "band": [100, 200], "q": 2, "second_order": "literal", "time_derivative": "frame-local"})"));
    CHECK(std::isinf(c.snrs[0]));
    CHECK(c.snrs[1] == 3.0);
    CHECK(c.seeds == std::vector<std::uint64_t>{9});
    CHECK(c.methods == std::vector<BenchMethod>{BenchMethod::Rm, BenchMethod::Sst2});
    CHECK(c.window.kind == WindowKind::Blackman);
    CHECK(c.window.fft_size == 1024);
    CHECK(c.algorithm == 1);
    CHECK(c.perturbation.y_dirs == std::vector<int>{1});
    CHECK(c.band.hi == 200.0);
    CHECK(c.q == 2);
    CHECK(c.second_order == SecondOrderScheme::Literal);
    CHECK(c.time_derivative == TimeDerivative::FrameLocal);
    CHECK_NOTHROW(c.validate());

    // defaults describe the crossing-chirp experiment
    const auto d = bench_config_from_json(nlohmann::json::object());
    CHECK(d.signal.components.size() == 4);
    CHECK(d.seeds.size() == 5);
    CHECK(d.second_order == SecondOrderScheme::Centered);

    CHECK_THROWS_AS(bench_config_from_json(nlohmann::json::parse(R"({"methods": ["nope"]})")), InputError);
    CHECK_THROWS_AS(bench_config_from_json(nlohmann::json::parse(R"({"hop": "x"})")), FormatError);
    CHECK_THROWS_AS(bench_config_from_json(nlohmann::json::parse(R"({"second_order": "third"})")), InputError);
    CHECK_THROWS_AS(bench_config_from_json(nlohmann::json::parse(R"({"seeds": []})")).validate(), InputError);
    CHECK_THROWS_AS(bench_config_from_json(nlohmann::json::parse(R"({"kbins": 100})")).validate(), InputError);
}
