#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "cwsep/audio.hpp"
#include "cwsep/dataset.hpp"
#include "cwsep/wav.hpp"

using namespace cwsep;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

AudioClip random_clip(int channels, std::size_t frames, int rate, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-0.9, 0.9);
    AudioClip c(channels, frames, rate);
    for (auto& ch : c.samples)
        for (auto& v : ch) v = dist(rng);
    return c;
}

double max_abs_diff(const AudioClip& a, const AudioClip& b) {
    REQUIRE(a.channels() == b.channels());
    REQUIRE(a.frames() == b.frames());
    double m = 0.0;
    for (int c = 0; c < a.channels(); ++c)
        for (std::size_t n = 0; n < a.frames(); ++n)
            m = std::max(m, std::abs(a.samples[c][n] - b.samples[c][n]));
    return m;
}

} // namespace

TEST_CASE("wav header round trip: stereo 44.1 kHz pcm16") {
    AudioClip c = random_clip(2, 44100, 44100, 1);
    const std::string path = temp_path("cwsep_hdr.wav");
    write_wav(path, c, WavEncoding::pcm16);
    AudioClip r = read_wav(path);
    CHECK(r.channels() == 2);
    CHECK(r.frames() == 44100);
    CHECK(r.sample_rate == 44100);
    std::remove(path.c_str());
}

TEST_CASE("wav all-zero file reads back as zeros") {
    AudioClip c(2, 500, 8000);
    const std::string path = temp_path("cwsep_zeros.wav");
    write_wav(path, c, WavEncoding::pcm16);
    AudioClip r = read_wav(path);
    for (const auto& ch : r.samples)
        for (double v : ch) CHECK(v == 0.0);
    std::remove(path.c_str());
}

TEST_CASE("pcm16 full-scale negative maps to -1.0 exactly") {
    // -32768 / 32768 == -1 is the full-scale division oracle
    AudioClip c(1, 4, 8000);
    c.samples[0] = {-1.0, 0.0, 0.5, -0.25};
    const std::string path = temp_path("cwsep_fs.wav");
    write_wav(path, c, WavEncoding::pcm16);
    AudioClip r = read_wav(path);
    CHECK(r.samples[0][0] == -1.0);
    std::remove(path.c_str());
}

TEST_CASE("float32 round trip is bit exact") {
    AudioClip c = random_clip(2, 3000, 22050, 2);
    // quantize to float precision first so the comparison is exact
    for (auto& ch : c.samples)
        for (auto& v : ch) v = static_cast<float>(v);
    const std::string path = temp_path("cwsep_f32.wav");
    write_wav(path, c, WavEncoding::float32);
    CHECK(max_abs_diff(c, read_wav(path)) == 0.0);
    std::remove(path.c_str());
}

TEST_CASE("round-trip error bounded by the encoding quantization step") {
    const std::string path = temp_path("cwsep_rt.wav");
    for (unsigned seed = 3; seed < 9; ++seed) {
        AudioClip c = random_clip(1 + static_cast<int>(seed % 2), 2048, 44100, seed);
        write_wav(path, c, WavEncoding::pcm16);
        CHECK(max_abs_diff(c, read_wav(path)) <= std::pow(2.0, -15));
        write_wav(path, c, WavEncoding::pcm24);
        CHECK(max_abs_diff(c, read_wav(path)) <= std::pow(2.0, -23));
        write_wav(path, c, WavEncoding::float32);
        CHECK(max_abs_diff(c, read_wav(path)) <= 1e-7);
    }
    std::remove(path.c_str());
}

TEST_CASE("empty clip writes a valid header and zero-size data chunk") {
    AudioClip c(2, 0, 44100);
    const std::string path = temp_path("cwsep_empty.wav");
    write_wav(path, c, WavEncoding::pcm16);
    AudioClip r = read_wav(path);
    CHECK(r.channels() == 2);
    CHECK(r.frames() == 0);
    std::remove(path.c_str());
}

TEST_CASE("read_wav rejects malformed and unsupported files") {
    const std::string path = temp_path("cwsep_bad.wav");
    {
        std::ofstream f(path, std::ios::binary);
        f << "not a riff file at all";
    }
    CHECK_THROWS_AS(read_wav(path), format_error);

    // valid container, unsupported encoding (8-bit PCM)
    {
        AudioClip c(1, 4, 8000);
        write_wav(path, c, WavEncoding::pcm16);
        std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(34); // bits-per-sample field
        const char bits8[2] = {8, 0};
        f.write(bits8, 2);
    }
    CHECK_THROWS_AS(read_wav(path), format_error);
    CHECK_THROWS_AS(read_wav("/nonexistent/dir/x.wav"), io_error);
    std::remove(path.c_str());
}

TEST_CASE("slice copies the requested window") {
    AudioClip ramp(1, 100, 10);
    for (std::size_t n = 0; n < 100; ++n) ramp.samples[0][n] = static_cast<double>(n);

    SECTION("full-length slice is the identity") {
        AudioClip s = slice(ramp, 0.0, 10.0);
        CHECK(max_abs_diff(s, ramp) == 0.0);
    }
    SECTION("offset slice of a ramp") {
        AudioClip s = slice(ramp, 0.5, 0.3); // start index 5, 3 samples
        REQUIRE(s.frames() == 3);
        CHECK(s.samples[0][0] == 5.0);
        CHECK(s.samples[0][1] == 6.0);
        CHECK(s.samples[0][2] == 7.0);
    }
    SECTION("sample count comes from rounding duration times rate") {
        AudioClip c(1, 3 * 44100, 44100);
        CHECK(slice(c, 1.0, 1.0).frames() == 44100);
    }
    SECTION("out-of-range window throws") {
        CHECK_THROWS_AS(slice(ramp, 9.9, 0.2), bounds_error);
    }
    SECTION("slice composition") {
        AudioClip outer = slice(ramp, 2.0, 0.8);
        AudioClip inner = slice(outer, 0.0, 0.5);
        CHECK(max_abs_diff(inner, slice(ramp, 2.0, 0.5)) == 0.0);
    }
}

TEST_CASE("mix is samplewise and linear in each gain") {
    AudioClip a = random_clip(2, 256, 44100, 11);
    AudioClip zeros(2, 256, 44100);

    CHECK(max_abs_diff(mix(a, zeros, 1.0, 1.0), a) == 0.0);
    CHECK(max_abs_diff(mix(a, a, 0.5, 0.5), a) <= 1e-15);

    AudioClip b = random_clip(2, 256, 44100, 12);
    AudioClip m = mix(a, b, 0.6, 1.0);
    for (int c = 0; c < 2; ++c)
        for (std::size_t n = 0; n < 256; ++n)
            CHECK(m.samples[c][n] == Catch::Approx(0.6 * a.samples[c][n] + 1.0 * b.samples[c][n]).margin(1e-15));

    SECTION("commutative under swapped pairs") {
        CHECK(max_abs_diff(mix(a, b, 0.3, 0.9), mix(b, a, 0.9, 0.3)) == 0.0);
    }
    SECTION("shape mismatches throw") {
        AudioClip mono = random_clip(1, 256, 44100, 13);
        CHECK_THROWS_AS(mix(a, mono, 1.0, 1.0), shape_error);
        AudioClip other_rate = random_clip(2, 256, 48000, 14);
        CHECK_THROWS_AS(mix(a, other_rate, 1.0, 1.0), shape_error);
        AudioClip shorter = random_clip(2, 255, 44100, 15);
        CHECK_THROWS_AS(mix(a, shorter, 1.0, 1.0), shape_error);
    }
}

TEST_CASE("dataset scan finds songs and rejects incomplete ones") {
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "cwsep_ds";
    fs::remove_all(root);
    for (const char* song : {"songA", "songB"}) {
        fs::create_directories(root / "train" / song);
        AudioClip c = random_clip(1, 400, 8000, 21);
        for (const char* stem : {"mixture.wav", "vocals.wav", "accompaniment.wav"})
            write_wav((root / "train" / song / stem).string(), c, WavEncoding::float32);
    }

    DatasetIndex idx = scan_dataset(root.string(), "train");
    REQUIRE(idx.entries.size() == 2);
    CHECK(idx.entries[0].song_id == "songA");
    LoadedEntry e = load_entry(idx.entries[0]);
    CHECK(e.mixture.frames() == 400);

    fs::remove((root / "train" / "songB" / "vocals.wav").string());
    CHECK_THROWS_AS(scan_dataset(root.string(), "train"), io_error);
    CHECK_THROWS_AS(scan_dataset(root.string(), "test"), io_error);
    fs::remove_all(root);
}
