#pragma once

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "cwsep/errors.hpp"
#include "cwsep/fft.hpp"

namespace cwsep {

/// One-sided complex STFT matrix, frames-by-bins.
struct ComplexSpectrogram {
    std::vector<std::complex<double>> values; // [t * bins + f]
    int frames = 0;
    int bins = 0; // frame_len/2 + 1
    int frame_len = 0;
    int hop = 0;
    double sample_rate = 0.0;

    std::complex<double>& at(int t, int f) { return values[static_cast<std::size_t>(t) * bins + f]; }
    const std::complex<double>& at(int t, int f) const {
        return values[static_cast<std::size_t>(t) * bins + f];
    }
};

/// Frame length in samples: the ms size rounded to the nearest even count.
inline int stft_frame_len(double sample_rate, double frame_ms) {
    return static_cast<int>(2 * std::llround(frame_ms * sample_rate / 1000.0 / 2.0));
}

inline int stft_hop(double sample_rate, double hop_ms) {
    return static_cast<int>(std::llround(hop_ms * sample_rate / 1000.0));
}

inline int stft_frame_count(std::size_t signal_len, int hop) {
    return static_cast<int>(signal_len / static_cast<std::size_t>(hop)) + 1;
}

namespace specdetail {

inline std::vector<double> periodic_hann(int n) {
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
    return w;
}

inline double reflect_index(const std::vector<double>& x, long i) {
    const long n = static_cast<long>(x.size());
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
    return x[static_cast<std::size_t>(i)];
}

} // namespace specdetail

/// Centered STFT: periodic Hann window, half-frame reflection padding,
/// one-sided transform. Frame and hop sizes are derived from the sample
/// rate (32 ms / 8 ms by default).
inline ComplexSpectrogram stft(const std::vector<double>& signal, double sample_rate,
                               double frame_ms = 32.0, double hop_ms = 8.0) {
    ComplexSpectrogram spec;
    spec.frame_len = stft_frame_len(sample_rate, frame_ms);
    spec.hop = stft_hop(sample_rate, hop_ms);
    spec.sample_rate = sample_rate;
    if (spec.frame_len <= 0 || spec.hop <= 0 || spec.hop > spec.frame_len)
        throw bounds_error("stft: bad framing (frame " + std::to_string(spec.frame_len) + ", hop " +
                           std::to_string(spec.hop) + ")");
    if (signal.size() < static_cast<std::size_t>(spec.frame_len))
        throw bounds_error("stft: signal shorter than one frame");

    spec.bins = spec.frame_len / 2 + 1;
    spec.frames = stft_frame_count(signal.size(), spec.hop);
    spec.values.resize(static_cast<std::size_t>(spec.frames) * spec.bins);

    const auto window = specdetail::periodic_hann(spec.frame_len);
    const int half = spec.frame_len / 2;
    RealFft fft(spec.frame_len);
    std::vector<double> frame(static_cast<std::size_t>(spec.frame_len));
    for (int t = 0; t < spec.frames; ++t) {
        const long start = static_cast<long>(t) * spec.hop - half;
        for (int i = 0; i < spec.frame_len; ++i)
            frame[static_cast<std::size_t>(i)] =
                window[static_cast<std::size_t>(i)] * specdetail::reflect_index(signal, start + i);
        fft.forward(frame.data(), &spec.at(t, 0));
    }
    return spec;
}

/// Weighted overlap-add inverse with squared-window normalization,
/// trimmed to `length` samples. Exact for any hop that leaves no sample
/// uncovered; anything else raises a normalization error.
inline std::vector<double> istft(const ComplexSpectrogram& spec, std::size_t length) {
    if (spec.frames <= 0 || spec.bins != spec.frame_len / 2 + 1)
        throw shape_error("istft: malformed spectrogram");

    const int half = spec.frame_len / 2;
    const std::size_t padded_len =
        static_cast<std::size_t>(spec.frames - 1) * spec.hop + static_cast<std::size_t>(spec.frame_len);
    std::vector<double> acc(padded_len, 0.0), den(padded_len, 0.0);

    const auto window = specdetail::periodic_hann(spec.frame_len);
    RealFft fft(spec.frame_len);
    std::vector<double> frame(static_cast<std::size_t>(spec.frame_len));
    for (int t = 0; t < spec.frames; ++t) {
        fft.inverse(&spec.at(t, 0), frame.data());
        const std::size_t start = static_cast<std::size_t>(t) * spec.hop;
        for (int i = 0; i < spec.frame_len; ++i) {
            const double w = window[static_cast<std::size_t>(i)];
            acc[start + i] += w * frame[static_cast<std::size_t>(i)];
            den[start + i] += w * w;
        }
    }

    if (length + static_cast<std::size_t>(half) > padded_len)
        throw bounds_error("istft: requested length exceeds spectrogram span");
    std::vector<double> out(length);
    for (std::size_t n = 0; n < length; ++n) {
        const std::size_t i = n + static_cast<std::size_t>(half);
        if (den[i] < 1e-10)
            throw numeric_error("istft: window/hop combination fails overlap-add coverage");
        out[n] = acc[i] / den[i];
    }
    return out;
}

/// Debug dump: "frames bins" header, then one row per frame of
/// comma-joined re,im pairs.
inline void dump_spectrogram(const std::string& path, const ComplexSpectrogram& spec) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw io_error("dump_spectrogram: cannot open " + path);
    f << spec.frames << ' ' << spec.bins << '\n';
    char buf[64];
    for (int t = 0; t < spec.frames; ++t) {
        for (int i = 0; i < spec.bins; ++i) {
            const auto& v = spec.at(t, i);
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g", v.real(), v.imag());
            f << (i ? " " : "") << buf;
        }
        f << '\n';
    }
    if (!f) throw io_error("dump_spectrogram: short write to " + path);
}

/// C*K spectrogram planes stacked channel-major: plane c*K + k holds audio
/// channel c, subband k. Framing metadata rides along so the tensor can be
/// unpacked and inverted.
struct CwsTensor {
    int C = 0, K = 0;
    int frames = 0, bins = 0;
    std::vector<std::complex<double>> data; // [plane][t][f]
    int frame_len = 0, hop = 0;
    double band_rate = 0.0;
    std::size_t band_length = 0; // time-domain samples per band

    int planes() const { return C * K; }
    std::size_t plane_size() const { return static_cast<std::size_t>(frames) * bins; }
    std::complex<double>& at(int p, int t, int f) {
        return data[static_cast<std::size_t>(p) * plane_size() + static_cast<std::size_t>(t) * bins + f];
    }
    const std::complex<double>& at(int p, int t, int f) const {
        return data[static_cast<std::size_t>(p) * plane_size() + static_cast<std::size_t>(t) * bins + f];
    }
};

/// Real-valued gain per bin, same geometry as the CwsTensor it masks.
struct MaskTensor {
    int C = 0, K = 0;
    int frames = 0, bins = 0;
    std::vector<double> data;

    int planes() const { return C * K; }
    std::size_t plane_size() const { return static_cast<std::size_t>(frames) * bins; }
    double& at(int p, int t, int f) {
        return data[static_cast<std::size_t>(p) * plane_size() + static_cast<std::size_t>(t) * bins + f];
    }
    const double& at(int p, int t, int f) const {
        return data[static_cast<std::size_t>(p) * plane_size() + static_cast<std::size_t>(t) * bins + f];
    }
    bool in_unit_range() const {
        for (double v : data)
            if (v < 0.0 || v > 1.0) return false;
        return true;
    }
};

/// Concatenate per-channel, per-band spectrograms (channel-major order:
/// [Y^1_1..Y^1_K, Y^2_1..Y^C_K]) into one stacked tensor.
inline CwsTensor pack_cws(const std::vector<ComplexSpectrogram>& specs, int C, int K) {
    if (static_cast<int>(specs.size()) != C * K)
        throw shape_error("pack_cws: expected C*K spectrograms");
    const ComplexSpectrogram& first = specs.front();
    for (const auto& s : specs)
        if (s.frames != first.frames || s.bins != first.bins)
            throw shape_error("pack_cws: spectrogram shapes disagree");

    CwsTensor t;
    t.C = C;
    t.K = K;
    t.frames = first.frames;
    t.bins = first.bins;
    t.frame_len = first.frame_len;
    t.hop = first.hop;
    t.band_rate = first.sample_rate;
    t.data.resize(static_cast<std::size_t>(C) * K * t.plane_size());
    for (int p = 0; p < C * K; ++p)
        std::copy(specs[static_cast<std::size_t>(p)].values.begin(),
                  specs[static_cast<std::size_t>(p)].values.end(),
                  t.data.begin() + static_cast<std::ptrdiff_t>(p * t.plane_size()));
    return t;
}

/// Exact inverse of pack_cws.
inline std::vector<ComplexSpectrogram> unpack_cws(const CwsTensor& t) {
    if (t.planes() <= 0 || t.data.size() != static_cast<std::size_t>(t.planes()) * t.plane_size())
        throw shape_error("unpack_cws: plane count does not match data");
    std::vector<ComplexSpectrogram> specs(static_cast<std::size_t>(t.planes()));
    for (int p = 0; p < t.planes(); ++p) {
        ComplexSpectrogram& s = specs[static_cast<std::size_t>(p)];
        s.frames = t.frames;
        s.bins = t.bins;
        s.frame_len = t.frame_len;
        s.hop = t.hop;
        s.sample_rate = t.band_rate;
        s.values.assign(t.data.begin() + static_cast<std::ptrdiff_t>(p * t.plane_size()),
                        t.data.begin() + static_cast<std::ptrdiff_t>((p + 1) * t.plane_size()));
    }
    return specs;
}

/// Elementwise X = m * Y; the real mask scales magnitude and keeps phase.
inline CwsTensor apply_mask(const MaskTensor& mask, const CwsTensor& mixture) {
    if (mask.C != mixture.C || mask.K != mixture.K || mask.frames != mixture.frames ||
        mask.bins != mixture.bins)
        throw shape_error("apply_mask: mask/mixture shapes disagree");
    CwsTensor out = mixture;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= mask.data[i];
    return out;
}

} // namespace cwsep
