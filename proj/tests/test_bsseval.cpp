#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "cwsep/bsseval.hpp"
#include "helpers.hpp"

using namespace cwsep;

namespace {

/// Unit-norm sinusoids at distinct integer frequencies over a full period
/// are exactly orthogonal.
std::vector<double> unit_sine(std::size_t n, int cycles) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = std::sin(2.0 * std::numbers::pi * cycles * static_cast<double>(i) /
                        static_cast<double>(n));
    const double norm = std::sqrt(static_cast<double>(n) / 2.0);
    for (auto& v : x) v /= norm;
    return x;
}

std::vector<double> lincomb(double a, const std::vector<double>& x, double b,
                            const std::vector<double>& y) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + b * y[i];
    return out;
}

double energy(const std::vector<double>& x) {
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return acc;
}

} // namespace

TEST_CASE("decompose fixtures on orthonormal references") {
    const std::size_t n = 1000;
    const auto s1 = unit_sine(n, 5);
    const auto s2 = unit_sine(n, 11);
    const auto noise = unit_sine(n, 17); // orthogonal to both refs
    const std::vector<std::vector<double>> refs = {s1, s2};

    SECTION("perfect estimate leaves no interference or artifacts") {
        Decomposition d = decompose(s1, refs, 0);
        REQUIRE(d.valid);
        CHECK(energy(d.e_interf) <= 1e-20);
        CHECK(energy(d.e_artif) <= 1e-20);
        CHECK(energy(d.s_target) == Catch::Approx(1.0).margin(1e-12));
    }
    SECTION("estimating the wrong source is pure interference") {
        Decomposition d = decompose(s2, refs, 0);
        REQUIRE(d.valid);
        CHECK(energy(d.s_target) <= 1e-20);
        CHECK(energy(d.e_artif) <= 1e-20);
        CHECK(energy(d.e_interf) == Catch::Approx(1.0).margin(1e-12));
    }
    SECTION("component energies recover the mixing coefficients") {
        const double a = 0.8, b = 0.3, c = 0.1;
        auto est = lincomb(1.0, lincomb(a, s1, b, s2), c, noise);
        Decomposition d = decompose(est, refs, 0);
        REQUIRE(d.valid);
        CHECK(energy(d.s_target) == Catch::Approx(a * a).margin(1e-10));
        CHECK(energy(d.e_interf) == Catch::Approx(b * b).margin(1e-10));
        CHECK(energy(d.e_artif) == Catch::Approx(c * c).margin(1e-10));
    }
}

TEST_CASE("decomposition identity holds on random signals") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> est(500), r1(500), r2(500);
        for (std::size_t i = 0; i < est.size(); ++i) {
            est[i] = dist(rng);
            r1[i] = dist(rng);
            r2[i] = dist(rng);
        }
        Decomposition d = decompose(est, {r1, r2}, 0);
        REQUIRE(d.valid);
        double err = 0.0, ref = 0.0;
        for (std::size_t i = 0; i < est.size(); ++i) {
            const double rec = d.s_target[i] + d.e_interf[i] + d.e_artif[i];
            err += (rec - est[i]) * (rec - est[i]);
            ref += est[i] * est[i];
        }
        CHECK(std::sqrt(err / ref) <= 1e-9);
    }
}

TEST_CASE("projections match a closed-form least-squares oracle on short windows") {
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 64;
        std::vector<double> est(n), r1(n), r2(n);
        for (std::size_t i = 0; i < n; ++i) {
            est[i] = dist(rng);
            r1[i] = dist(rng);
            r2[i] = dist(rng);
        }
        // 2x2 normal equations by Cramer's rule
        double g11 = 0, g12 = 0, g22 = 0, b1 = 0, b2 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            g11 += r1[i] * r1[i];
            g12 += r1[i] * r2[i];
            g22 += r2[i] * r2[i];
            b1 += r1[i] * est[i];
            b2 += r2[i] * est[i];
        }
        const double det = g11 * g22 - g12 * g12;
        const double c1 = (b1 * g22 - b2 * g12) / det;
        const double c2 = (g11 * b2 - g12 * b1) / det;

        Decomposition d = decompose(est, {r1, r2}, 0);
        REQUIRE(d.valid);
        for (std::size_t i = 0; i < n; ++i) {
            const double proj = c1 * r1[i] + c2 * r2[i];
            CHECK(d.e_artif[i] == Catch::Approx(est[i] - proj).margin(1e-9));
        }
    }
}

TEST_CASE("metric fixtures") {
    const std::size_t n = 1000;
    const auto s1 = unit_sine(n, 5);
    const auto s2 = unit_sine(n, 11);
    const auto noise = unit_sine(n, 17);
    const std::vector<std::vector<double>> refs = {s1, s2};

    SECTION("perfect estimate hits the +120 dB cap") {
        Metrics m = metrics(decompose(s1, refs, 0));
        CHECK(m.sdr == kMetricCapDb);
        CHECK(m.capped);
    }
    SECTION("orthogonal noise at -20 dB gives 20 dB SDR") {
        auto est = lincomb(1.0, s1, 0.1, noise);
        Metrics m = metrics(decompose(est, refs, 0));
        CHECK(m.sdr == Catch::Approx(20.0).margin(0.01));
        CHECK(m.sar == Catch::Approx(20.0).margin(0.01));
        CHECK(m.sir == kMetricCapDb);
    }
    SECTION("half-amplitude interference gives 6.02 dB SIR") {
        auto est = lincomb(1.0, s1, 0.5, s2);
        Metrics m = metrics(decompose(est, refs, 0));
        CHECK(m.sir == Catch::Approx(6.0206).margin(0.01));
        CHECK(m.sdr == Catch::Approx(6.0206).margin(0.01));
        CHECK(m.sar == kMetricCapDb);
    }
}

TEST_CASE("scale invariance and artifact monotonicity") {
    const std::size_t n = 1000;
    const auto s1 = unit_sine(n, 5);
    const auto s2 = unit_sine(n, 11);
    const auto noise = unit_sine(n, 17);
    const std::vector<std::vector<double>> refs = {s1, s2};
    auto est = lincomb(1.0, lincomb(1.0, s1, 0.4, s2), 0.2, noise);

    SECTION("positive rescaling leaves SIR and SAR unchanged") {
        Metrics base = metrics(decompose(est, refs, 0));
        for (double c : {0.1, 3.0, 42.0}) {
            Metrics scaled = metrics(decompose(lincomb(c, est, 0.0, est), refs, 0));
            CHECK(scaled.sir == Catch::Approx(base.sir).margin(1e-9));
            CHECK(scaled.sar == Catch::Approx(base.sar).margin(1e-9));
        }
    }
    SECTION("extra orthogonal artifact energy lowers SDR and SAR, not SIR") {
        const auto more = unit_sine(n, 23);
        Metrics base = metrics(decompose(est, refs, 0));
        Metrics worse = metrics(decompose(lincomb(1.0, est, 0.3, more), refs, 0));
        CHECK(worse.sdr < base.sdr);
        CHECK(worse.sar < base.sar);
        CHECK(worse.sir == Catch::Approx(base.sir).margin(1e-9));
    }
}

TEST_CASE("zero-energy reference windows are invalid") {
    std::vector<double> est(100, 0.5);
    std::vector<double> r1(100, 0.0); // silent reference
    std::vector<double> r2(100, 0.3);
    Decomposition d = decompose(est, {r1, r2}, 0);
    CHECK_FALSE(d.valid);
    CHECK_THROWS_AS(metrics(d), state_error);

    SECTION("collinear references are invalid too") {
        std::vector<double> r3(100);
        for (std::size_t i = 0; i < 100; ++i) r3[i] = 2.0 * r2[i];
        CHECK_FALSE(decompose(est, {r2, r3}, 0).valid);
    }
}

TEST_CASE("windowed evaluation") {
    const int fs = 1000;
    auto make_clip = [&](double seconds, int cycles, double amp) {
        AudioClip c(1, static_cast<std::size_t>(seconds * fs), fs);
        for (std::size_t i = 0; i < c.frames(); ++i)
            c.samples[0][i] =
                amp * std::sin(2.0 * std::numbers::pi * cycles * static_cast<double>(i) / fs);
        return c;
    };

    SECTION("3.5 s song yields 3 one-second windows") {
        AudioClip ref1 = make_clip(3.5, 50, 1.0);
        AudioClip ref2 = make_clip(3.5, 120, 0.7);
        AudioClip est = make_clip(3.5, 50, 1.0);
        SongScore s = eval_windowed(est, {ref1, ref2}, 0);
        CHECK(s.window_count == 3);
        CHECK(s.valid_windows == 3);
    }
    SECTION("perfect estimate scores the cap in every window") {
        AudioClip ref1 = make_clip(3.0, 50, 1.0);
        AudioClip ref2 = make_clip(3.0, 120, 0.7);
        SongScore s = eval_windowed(ref1, {ref1, ref2}, 0);
        for (const WindowScore& r : s.rows) CHECK(r.m.sdr == kMetricCapDb);
        CHECK(s.sdr == kMetricCapDb);
    }
    SECTION("a 1 s signal gives one window equal to the whole-signal metrics") {
        AudioClip ref1 = make_clip(1.0, 50, 1.0);
        AudioClip ref2 = make_clip(1.0, 120, 0.7);
        AudioClip est = ref1;
        for (std::size_t i = 0; i < est.frames(); ++i) est.samples[0][i] += 0.1 * ref2.samples[0][i];
        SongScore s = eval_windowed(est, {ref1, ref2}, 0);
        REQUIRE(s.window_count == 1);
        Metrics whole = metrics(decompose(est.samples[0], {ref1.samples[0], ref2.samples[0]}, 0));
        CHECK(s.sdr == Catch::Approx(whole.sdr).margin(1e-12));
        CHECK(s.sir == Catch::Approx(whole.sir).margin(1e-12));
    }
    SECTION("windows with a silent reference are excluded") {
        AudioClip ref1 = make_clip(3.0, 50, 1.0);
        AudioClip ref2 = make_clip(3.0, 120, 0.7);
        // silence the first second of the target reference
        for (int i = 0; i < fs; ++i) ref1.samples[0][static_cast<std::size_t>(i)] = 0.0;
        SongScore s = eval_windowed(ref2, {ref1, ref2}, 0);
        CHECK(s.window_count == 3);
        CHECK(s.valid_windows == 2);
    }
    SECTION("misaligned estimates are rejected") {
        AudioClip ref1 = make_clip(3.0, 50, 1.0);
        AudioClip ref2 = make_clip(3.0, 120, 0.7);
        AudioClip shorter = make_clip(2.5, 50, 1.0);
        CHECK_THROWS_AS(eval_windowed(shorter, {ref1, ref2}, 0), shape_error);
    }
}

TEST_CASE("aggregation uses window means and song medians") {
    auto song_with = [](std::initializer_list<double> values) {
        SongScore s;
        for (double v : values) {
            WindowScore w;
            w.m.sdr = w.m.sir = w.m.sar = v;
            s.rows.push_back(w);
        }
        s.valid_windows = static_cast<int>(values.size());
        s.window_count = s.valid_windows;
        double acc = 0.0;
        for (double v : values) acc += v;
        s.sdr = s.sir = s.sar = acc / static_cast<double>(values.size());
        return s;
    };

    SECTION("windows [1,2,3] average to 2") {
        CHECK(song_with({1.0, 2.0, 3.0}).sdr == Catch::Approx(2.0));
    }
    SECTION("songs [2,4,10] have median 4") {
        TestSetScore t = aggregate({song_with({2.0}), song_with({4.0}), song_with({10.0})});
        CHECK(t.sdr == Catch::Approx(4.0));
        CHECK(t.songs == 3);
    }
    SECTION("a single song is its own set score") {
        TestSetScore t = aggregate({song_with({1.0, 2.0, 3.0})});
        CHECK(t.sdr == Catch::Approx(2.0));
    }
    SECTION("even song counts take the midpoint") {
        TestSetScore t = aggregate(
            {song_with({1.0}), song_with({2.0}), song_with({5.0}), song_with({10.0})});
        CHECK(t.sdr == Catch::Approx(3.5));
    }
    SECTION("songs without valid windows are skipped") {
        SongScore empty;
        empty.window_count = 2;
        TestSetScore t = aggregate({song_with({4.0}), empty});
        CHECK(t.songs == 1);
        CHECK(t.sdr == Catch::Approx(4.0));
    }
}
