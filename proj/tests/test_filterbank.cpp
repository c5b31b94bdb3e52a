#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>

#include "cwsep/filterbank.hpp"

using namespace cwsep;

namespace {

std::vector<double> white_noise(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> x(n);
    for (auto& v : x) v = dist(rng);
    return x;
}

std::vector<double> tone(std::size_t n, double nyquist_fraction) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = std::sin(std::numbers::pi * nyquist_fraction * static_cast<double>(i));
    return x;
}

} // namespace

TEST_CASE("K=1 design degenerates to the identity bank") {
    FilterBankPair bank = design_filterbank(1, 64, 80.0);
    CHECK(bank.K == 1);
    CHECK(bank.group_delay == 0);
    REQUIRE(bank.analysis.size() == 1);
    CHECK(bank.analysis[0] == std::vector<double>{1.0});

    auto x = white_noise(500, 3);
    SubbandSet sb = analyze(x, 8000.0, bank);
    REQUIRE(sb.bands.size() == 1);
    CHECK(sb.bands[0] == x);
    CHECK(synthesize(sb, bank) == x);
}

TEST_CASE("design_filterbank(4, 64, 80) shape and delay") {
    FilterBankPair bank = design_filterbank(4, 64, 80.0);
    CHECK(bank.analysis.size() == 4);
    CHECK(bank.synthesis.size() == 4);
    for (const auto& f : bank.analysis) CHECK(f.size() == 64);
    for (const auto& f : bank.synthesis) CHECK(f.size() == 64);
    CHECK(bank.group_delay == 63); // linear-phase cascade: (L-1)/2 twice
}

TEST_CASE("prototype crosses -3 dB at the half-band frequency") {
    for (int K : {2, 4, 8}) {
        FilterBankPair bank = design_filterbank(K, default_taps(K), kDefaultAttenuationDb);
        const auto& p = bank.prototype.taps;
        const double edge = fbdetail::magnitude_at(p, std::numbers::pi / (2.0 * K));
        const double dc = fbdetail::magnitude_at(p, 0.0);
        const double rel_db = 20.0 * std::log10(edge / dc);
        CHECK(rel_db == Catch::Approx(-3.0).margin(1.0));
    }
}

TEST_CASE("infeasible attenuation raises a design error with the achievable value") {
    try {
        design_filterbank(8, 64, 80.0); // 64 taps cannot reach 80 dB at K=8
        FAIL("expected design_error");
    } catch (const design_error& e) {
        CHECK(e.achieved_attenuation_db > 40.0);
        CHECK(e.achieved_attenuation_db < 80.0);
    }
}

TEST_CASE("design precondition violations") {
    CHECK_THROWS_AS(design_filterbank(3, 64, 80.0), bounds_error);
    CHECK_THROWS_AS(design_filterbank(4, 60, 80.0), bounds_error); // not a multiple of 2K
    CHECK_THROWS_AS(design_filterbank(4, 64, 30.0), bounds_error); // below 40 dB floor
}

TEST_CASE("analyze of zeros gives all-zero bands") {
    FilterBankPair bank = design_filterbank(4, 64, 80.0);
    std::vector<double> zeros(1000, 0.0);
    SubbandSet sb = analyze(zeros, 44100.0, bank);
    REQUIRE(sb.bands.size() == 4);
    for (const auto& band : sb.bands) {
        CHECK(band.size() == 250);
        for (double v : band) CHECK(v == 0.0);
    }
}

TEST_CASE("analyze of a unit impulse returns decimated filter taps") {
    FilterBankPair bank = design_filterbank(4, 64, 80.0);
    std::vector<double> impulse(256, 0.0);
    impulse[0] = 1.0;
    SubbandSet sb = analyze(impulse, 44100.0, bank);
    for (int k = 0; k < 4; ++k)
        for (std::size_t m = 0; m < sb.bands[static_cast<std::size_t>(k)].size(); ++m) {
            const std::size_t j = m * 4;
            const double expected = j < 64 ? bank.analysis[static_cast<std::size_t>(k)][j] : 0.0;
            CHECK(sb.bands[static_cast<std::size_t>(k)][m] == Catch::Approx(expected).margin(1e-15));
        }
}

TEST_CASE("band length is ceil(N/K) and odd lengths are padded") {
    FilterBankPair bank = design_filterbank(8, default_taps(8), kDefaultAttenuationDb);
    auto x = white_noise(1003, 4);
    SubbandSet sb = analyze(x, 44100.0, bank);
    for (const auto& band : sb.bands) CHECK(band.size() == 126); // ceil(1003/8)
    auto rec = synthesize(sb, bank);
    CHECK(rec.size() == 1003); // trimmed back to the source length
}

TEST_CASE("synthesize on all-zero bands returns zeros") {
    FilterBankPair bank = design_filterbank(2, 64, 80.0);
    SubbandSet sb;
    sb.K = 2;
    sb.source_rate = 44100.0;
    sb.source_length = 300;
    sb.bands.assign(2, std::vector<double>(150, 0.0));
    auto rec = synthesize(sb, bank);
    REQUIRE(rec.size() == 300);
    for (double v : rec) CHECK(v == 0.0);
}

TEST_CASE("synthesize rejects band-count mismatch") {
    FilterBankPair bank = design_filterbank(2, 64, 80.0);
    SubbandSet sb;
    sb.K = 4;
    sb.bands.assign(4, std::vector<double>(10, 0.0));
    CHECK_THROWS_AS(synthesize(sb, bank), shape_error);
}

TEST_CASE("near-perfect reconstruction for K in {2,4,8}") {
    auto x = white_noise(44100, 5);
    for (int K : {2, 4, 8}) {
        FilterBankPair bank = design_filterbank(K, 32 * K, kDefaultAttenuationDb);
        auto rec = reconstruct(x, 44100.0, bank);
        const double snr = reconstruction_snr(x, rec);
        INFO("K=" << K);
        CHECK(snr >= 60.0);
    }
}

TEST_CASE("band-edge tones survive the cascade (aliasing cancellation)") {
    // sweep concentrated on band edges plus a coarse fill of the axis
    for (int K : {2, 8}) {
        FilterBankPair bank = design_filterbank(K, 32 * K, kDefaultAttenuationDb);
        double worst = 1e9;
        for (int k = 1; k < K; ++k) {
            const double edge = static_cast<double>(k) / K;
            for (double off : {-0.01, 0.0, 0.01}) {
                auto t = tone(22050, edge + off);
                worst = std::min(worst, reconstruction_snr(t, reconstruct(t, 44100.0, bank)));
            }
        }
        for (int i = 1; i <= 20; ++i) {
            auto t = tone(22050, 0.97 * i / 20.0 + 0.01);
            worst = std::min(worst, reconstruction_snr(t, reconstruct(t, 44100.0, bank)));
        }
        INFO("K=" << K);
        CHECK(worst >= 55.0);
    }
}

TEST_CASE("band energies sum to the input energy for white noise") {
    auto x = white_noise(65536, 6);
    double in_energy = 0.0;
    for (double v : x) in_energy += v * v;
    for (int K : {2, 4, 8}) {
        FilterBankPair bank = design_filterbank(K, default_taps(K), kDefaultAttenuationDb);
        SubbandSet sb = analyze(x, 44100.0, bank);
        double band_energy = 0.0;
        for (const auto& band : sb.bands)
            for (double v : band) band_energy += v * v;
        const double ratio_db = 10.0 * std::log10(band_energy / in_energy);
        INFO("K=" << K);
        CHECK(std::abs(ratio_db) <= 1.0);
    }
}

TEST_CASE("analyze is linear") {
    FilterBankPair bank = design_filterbank(4, 128, kDefaultAttenuationDb);
    auto x = white_noise(2000, 7);
    auto z = white_noise(2000, 8);
    const double a = 0.37, b = -1.21;
    std::vector<double> combo(2000);
    for (std::size_t i = 0; i < combo.size(); ++i) combo[i] = a * x[i] + b * z[i];

    SubbandSet sx = analyze(x, 44100.0, bank);
    SubbandSet sz = analyze(z, 44100.0, bank);
    SubbandSet sc = analyze(combo, 44100.0, bank);
    for (int k = 0; k < 4; ++k)
        for (std::size_t m = 0; m < sc.bands[static_cast<std::size_t>(k)].size(); ++m) {
            const double want = a * sx.bands[static_cast<std::size_t>(k)][m] +
                                b * sz.bands[static_cast<std::size_t>(k)][m];
            CHECK(sc.bands[static_cast<std::size_t>(k)][m] == Catch::Approx(want).margin(1e-12));
        }
}

TEST_CASE("design is deterministic across calls") {
    FilterBankPair a = design_filterbank(4, 128, 88.0);
    FilterBankPair b = design_filterbank(4, 128, 88.0);
    CHECK(a.analysis == b.analysis);
    CHECK(a.synthesis == b.synthesis);
    CHECK(a.prototype.taps == b.prototype.taps);
}

TEST_CASE("reconstruction_snr fixtures") {
    auto x = tone(4096, 0.125);

    SECTION("identical signals hit the cap") { CHECK(reconstruction_snr(x, x) == 120.0); }
    SECTION("all-zero estimate scores 0 dB") {
        std::vector<double> zeros(x.size(), 0.0);
        CHECK(reconstruction_snr(x, zeros) == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("orthogonal error at -40 dB relative energy scores 40 dB") {
        // x_orth: cosine at the same frequency, same norm, orthogonal to x
        std::vector<double> y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            y[i] = x[i] + 0.01 * std::cos(std::numbers::pi * 0.125 * static_cast<double>(i));
        CHECK(reconstruction_snr(x, y) == Catch::Approx(40.0).margin(0.01));
    }
    SECTION("all-zero reference is undefined") {
        std::vector<double> zeros(16, 0.0);
        CHECK_THROWS_AS(reconstruction_snr(zeros, zeros), numeric_error);
    }
}

TEST_CASE("coefficient files round trip with full precision") {
    FilterBankPair bank = design_filterbank(4, 64, 80.0);
    const std::string path =
        (std::filesystem::temp_directory_path() / "cwsep_bank.txt").string();
    save_filterbank(path, bank);
    FilterBankPair loaded = load_filterbank(path);
    CHECK(loaded.K == 4);
    CHECK(loaded.taps() == 64);
    CHECK(loaded.group_delay == 63);
    CHECK(loaded.analysis == bank.analysis);
    CHECK(loaded.synthesis == bank.synthesis);
    std::remove(path.c_str());
}
