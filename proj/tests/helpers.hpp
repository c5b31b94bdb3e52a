#pragma once

// Shared fixtures and oracles for the unit and acceptance suites.

#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "cwsep/audio.hpp"
#include "cwsep/dataset.hpp"
#include "cwsep/nn.hpp"
#include "cwsep/tensor.hpp"
#include "cwsep/wav.hpp"

namespace testutil {

inline cwsep::Tensor4<double> random_tensor(int n, int c, int h, int w, unsigned seed,
                                            double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    cwsep::Tensor4<double> t(n, c, h, w);
    for (auto& v : t.data) v = dist(rng);
    return t;
}

struct FdResult {
    double max_rel_err = 0.0;
    int checked = 0;
};

struct KindFdResult {
    std::map<std::string, FdResult> per_kind; // layer kind -> result
    double max_rel_err = 0.0;
};

/// Central finite differences against backward() on loss = sum(out .* R).
/// Samples `samples` parameters spread across every parameter array.
inline FdResult finite_difference_check(cwsep::NetworkGraph<double>& net,
                                        const cwsep::Tensor4<double>& x, int samples,
                                        unsigned seed, double eps = 1e-5) {
    using cwsep::Tensor4;
    const Tensor4<double> probe = [&] {
        Tensor4<double> out = cwsep::forward(net, x, true);
        Tensor4<double> r = random_tensor(out.n, out.c, out.h, out.w, seed + 1);
        return r;
    }();

    auto loss = [&]() {
        Tensor4<double> out = cwsep::forward(net, x, true);
        double acc = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) acc += out.data[i] * probe.data[i];
        return acc;
    };

    loss();
    cwsep::zero_grads(net);
    cwsep::backward(net, probe);

    struct Slot {
        std::vector<double>* p;
        std::vector<double>* g;
    };
    std::vector<Slot> slots;
    std::size_t total = 0;
    cwsep::for_each_param(net, [&](const std::string&, std::vector<double>& p, std::vector<double>& g) {
        slots.push_back({&p, &g});
        total += p.size();
    });

    std::mt19937_64 rng(seed);
    FdResult result;
    for (int s = 0; s < samples; ++s) {
        const std::size_t target = std::uniform_int_distribution<std::size_t>(0, total - 1)(rng);
        std::size_t off = target;
        Slot slot{};
        for (const auto& sl : slots) {
            if (off < sl.p->size()) {
                slot = sl;
                break;
            }
            off -= sl.p->size();
        }
        double& p = (*slot.p)[off];
        const double analytic = (*slot.g)[off];
        const double saved = p;
        p = saved + eps;
        const double up = loss();
        p = saved - eps;
        const double down = loss();
        p = saved;
        const double fd = (up - down) / (2.0 * eps);
        // Parameters with mathematically zero gradient (e.g. conv bias feeding
        // batchnorm) leave only rounding noise in the difference quotient;
        // compare those absolutely instead of relatively.
        const double scale = std::max(std::abs(fd), std::abs(analytic));
        const double rel = scale < 1e-6 ? 0.0 : std::abs(fd - analytic) / scale;
        result.max_rel_err = std::max(result.max_rel_err, rel);
        ++result.checked;
    }
    return result;
}

/// Like finite_difference_check, but draws up to `samples_per_kind`
/// parameters from every layer kind separately (all of them when a kind
/// has fewer).
inline KindFdResult finite_difference_check_per_kind(cwsep::NetworkGraph<double>& net,
                                                     const cwsep::Tensor4<double>& x,
                                                     int samples_per_kind, unsigned seed,
                                                     double eps = 1e-5) {
    using cwsep::Tensor4;
    const Tensor4<double> probe = [&] {
        Tensor4<double> out = cwsep::forward(net, x, true);
        return random_tensor(out.n, out.c, out.h, out.w, seed + 1);
    }();
    auto loss = [&]() {
        Tensor4<double> out = cwsep::forward(net, x, true);
        double acc = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) acc += out.data[i] * probe.data[i];
        return acc;
    };
    loss();
    cwsep::zero_grads(net);
    cwsep::backward(net, probe);

    struct Slot {
        std::string kind;
        std::vector<double>* p;
        std::vector<double>* g;
    };
    std::vector<Slot> slots;
    std::map<std::string, std::size_t> kind_totals;
    cwsep::for_each_param(net, [&](const std::string& name, std::vector<double>& p,
                                   std::vector<double>& g) {
        const auto dot = name.find('.');
        const auto dot2 = name.find('.', dot + 1);
        const std::string kind = name.substr(dot + 1, dot2 - dot - 1);
        slots.push_back({kind, &p, &g});
        kind_totals[kind] += p.size();
    });

    std::mt19937_64 rng(seed);
    KindFdResult result;
    for (const auto& [kind, total] : kind_totals) {
        FdResult& kr = result.per_kind[kind];
        const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(samples_per_kind), total);
        for (std::size_t s = 0; s < want; ++s) {
            std::size_t off = std::uniform_int_distribution<std::size_t>(0, total - 1)(rng);
            Slot slot{};
            for (const auto& sl : slots) {
                if (sl.kind != kind) continue;
                if (off < sl.p->size()) {
                    slot = sl;
                    break;
                }
                off -= sl.p->size();
            }
            double& p = (*slot.p)[off];
            const double analytic = (*slot.g)[off];
            const double saved = p;
            p = saved + eps;
            const double up = loss();
            p = saved - eps;
            const double down = loss();
            p = saved;
            const double fd = (up - down) / (2.0 * eps);
            const double scale = std::max(std::abs(fd), std::abs(analytic));
            const double rel = scale < 1e-6 ? 0.0 : std::abs(fd - analytic) / scale;
            kr.max_rel_err = std::max(kr.max_rel_err, rel);
            ++kr.checked;
            result.max_rel_err = std::max(result.max_rel_err, rel);
        }
    }
    return result;
}

/// Tiny deterministic "songs": a tonal vocal line against band-limited
/// noise accompaniment, written as a musdb-style directory tree.
inline cwsep::AudioClip synth_vocal(double seconds, int fs, unsigned seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = static_cast<std::size_t>(seconds * fs);
    cwsep::AudioClip clip(1, n, fs);
    std::uniform_int_distribution<int> note(0, 5);
    const double base[6] = {220.0, 261.6, 293.7, 329.6, 392.0, 440.0};
    std::size_t pos = 0;
    while (pos < n) {
        const std::size_t seg = std::min<std::size_t>(n - pos, static_cast<std::size_t>(0.4 * fs));
        const double f0 = base[note(rng)];
        for (std::size_t i = 0; i < seg; ++i) {
            const double t = static_cast<double>(pos + i) / fs;
            const double vib = 1.0 + 0.002 * std::sin(2.0 * std::numbers::pi * 5.0 * t);
            double v = 0.55 * std::sin(2.0 * std::numbers::pi * f0 * vib * t);
            v += 0.22 * std::sin(2.0 * std::numbers::pi * 2.0 * f0 * t);
            const double env = std::min(1.0, static_cast<double>(i) / (0.01 * fs)) *
                               std::min(1.0, static_cast<double>(seg - i) / (0.01 * fs));
            clip.samples[0][pos + i] = v * env;
        }
        pos += seg;
    }
    return clip;
}

inline cwsep::AudioClip synth_accompaniment(double seconds, int fs, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const std::size_t n = static_cast<std::size_t>(seconds * fs);
    cwsep::AudioClip clip(1, n, fs);
    // first-order highpassed noise: percussive hiss well separated from the tonal line
    double prev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double white = dist(rng);
        clip.samples[0][i] = 0.30 * (white - prev);
        prev = white;
    }
    return clip;
}

/// Writes train/valid splits of synthetic songs; returns the root.
inline std::string write_synthetic_dataset(const std::string& name, int fs, double seconds,
                                           int train_songs, int valid_songs) {
    namespace fs_ = std::filesystem;
    const fs_::path root = fs_::temp_directory_path() / name;
    fs_::remove_all(root);
    unsigned seed = 42;
    auto write_song = [&](const std::string& split, int idx) {
        const fs_::path dir = root / split / ("song" + std::to_string(idx));
        fs_::create_directories(dir);
        cwsep::AudioClip vocal = synth_vocal(seconds, fs, seed++);
        cwsep::AudioClip acc = synth_accompaniment(seconds, fs, seed++);
        cwsep::AudioClip mixture = cwsep::mix(vocal, acc, 1.0, 1.0);
        cwsep::write_wav((dir / "vocals.wav").string(), vocal, cwsep::WavEncoding::float32);
        cwsep::write_wav((dir / "accompaniment.wav").string(), acc, cwsep::WavEncoding::float32);
        cwsep::write_wav((dir / "mixture.wav").string(), mixture, cwsep::WavEncoding::float32);
    };
    for (int i = 0; i < train_songs; ++i) write_song("train", i);
    for (int i = 0; i < valid_songs; ++i) write_song("valid", train_songs + i);
    return root.string();
}

} // namespace testutil
