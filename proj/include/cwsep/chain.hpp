#pragma once

#include <complex>
#include <vector>

#include "cwsep/audio.hpp"
#include "cwsep/errors.hpp"
#include "cwsep/filterbank.hpp"
#include "cwsep/spectral.hpp"
#include "cwsep/tensor.hpp"

namespace cwsep {

/// Filter-bank analysis + per-band STFT + channel-wise packing for every
/// audio channel of a clip. With K > 1 the signal tail is zero-padded past
/// the filter length first, so a later synthesis covers the full extent;
/// the K = 1 path bypasses the filter bank entirely.
inline CwsTensor cws_analyze(const AudioClip& clip, const FilterBankPair& bank,
                             double frame_ms = 32.0, double hop_ms = 8.0) {
    clip.require_valid("cws_analyze");
    const int C = clip.channels();
    const int K = bank.K;

    std::vector<ComplexSpectrogram> specs;
    specs.reserve(static_cast<std::size_t>(C) * K);
    std::size_t band_len = 0;
    for (int c = 0; c < C; ++c) {
        if (K == 1) {
            specs.push_back(stft(clip.samples[static_cast<std::size_t>(c)],
                                 static_cast<double>(clip.sample_rate), frame_ms, hop_ms));
            band_len = clip.frames();
        } else {
            std::vector<double> padded = clip.samples[static_cast<std::size_t>(c)];
            padded.resize(padded.size() + static_cast<std::size_t>(2 * bank.taps()), 0.0);
            SubbandSet sb = analyze(padded, static_cast<double>(clip.sample_rate), bank);
            band_len = sb.bands[0].size();
            for (int k = 0; k < K; ++k)
                specs.push_back(stft(sb.bands[static_cast<std::size_t>(k)],
                                     static_cast<double>(clip.sample_rate) / K, frame_ms, hop_ms));
        }
    }
    CwsTensor t = pack_cws(specs, C, K);
    t.band_length = band_len;
    return t;
}

/// Exact inverse of cws_analyze up to the filter-bank floor: unpack,
/// iSTFT each band, synthesize each channel, trim to target_len samples.
inline AudioClip cws_synthesize(const CwsTensor& t, const FilterBankPair& bank, int sample_rate,
                                std::size_t target_len) {
    if (t.K != bank.K) throw shape_error("cws_synthesize: tensor/bank band counts disagree");
    const std::vector<ComplexSpectrogram> specs = unpack_cws(t);

    AudioClip out(t.C, target_len, sample_rate);
    for (int c = 0; c < t.C; ++c) {
        if (t.K == 1) {
            std::vector<double> x = istft(specs[static_cast<std::size_t>(c)], t.band_length);
            x.resize(target_len, 0.0);
            out.samples[static_cast<std::size_t>(c)] = std::move(x);
        } else {
            SubbandSet sb;
            sb.K = t.K;
            sb.source_rate = static_cast<double>(sample_rate);
            sb.source_length = t.band_length * static_cast<std::size_t>(t.K);
            sb.bands.reserve(static_cast<std::size_t>(t.K));
            for (int k = 0; k < t.K; ++k)
                sb.bands.push_back(
                    istft(specs[static_cast<std::size_t>(c * t.K + k)], t.band_length));
            std::vector<double> x = synthesize(sb, bank);
            x.resize(target_len, 0.0);
            out.samples[static_cast<std::size_t>(c)] = std::move(x);
        }
    }
    return out;
}

/// Network input: each complex plane becomes two real planes (re, im), in
/// plane order, transposed to (freq, time).
template <typename T>
Tensor4<T> cws_to_input(const CwsTensor& t) {
    Tensor4<T> x(1, 2 * t.planes(), t.bins, t.frames);
    for (int p = 0; p < t.planes(); ++p)
        for (int tt = 0; tt < t.frames; ++tt)
            for (int f = 0; f < t.bins; ++f) {
                const std::complex<double>& v = t.at(p, tt, f);
                x.at(0, 2 * p, f, tt) = static_cast<T>(v.real());
                x.at(0, 2 * p + 1, f, tt) = static_cast<T>(v.imag());
            }
    return x;
}

/// Splits a network output of sources*C*K planes (freq, time) into one
/// MaskTensor per source, plane s*C*K + p holding source s, complex plane p.
template <typename T>
std::vector<MaskTensor> masks_from_output(const Tensor4<T>& out, int sources, const CwsTensor& like) {
    if (out.c != sources * like.planes() || out.h != like.bins || out.w != like.frames)
        throw shape_error("masks_from_output: output shape does not match tensor geometry");
    std::vector<MaskTensor> masks(static_cast<std::size_t>(sources));
    for (int s = 0; s < sources; ++s) {
        MaskTensor& m = masks[static_cast<std::size_t>(s)];
        m.C = like.C;
        m.K = like.K;
        m.frames = like.frames;
        m.bins = like.bins;
        m.data.resize(static_cast<std::size_t>(m.planes()) * m.plane_size());
        for (int p = 0; p < like.planes(); ++p)
            for (int tt = 0; tt < like.frames; ++tt)
                for (int f = 0; f < like.bins; ++f)
                    m.at(p, tt, f) = static_cast<double>(out.at(0, s * like.planes() + p, f, tt));
    }
    return masks;
}

/// Adjoint of masks_from_output: per-source mask gradients back to the
/// network-output layout.
template <typename T>
Tensor4<T> mask_grads_to_output(const std::vector<MaskTensor>& dmasks, const CwsTensor& like) {
    const int sources = static_cast<int>(dmasks.size());
    Tensor4<T> g(1, sources * like.planes(), like.bins, like.frames);
    for (int s = 0; s < sources; ++s)
        for (int p = 0; p < like.planes(); ++p)
            for (int tt = 0; tt < like.frames; ++tt)
                for (int f = 0; f < like.bins; ++f)
                    g.at(0, s * like.planes() + p, f, tt) =
                        static_cast<T>(dmasks[static_cast<std::size_t>(s)].at(p, tt, f));
    return g;
}

/// Input geometry for a given clip length without running any audio
/// through the chain; used by the profiler.
struct CwsShape {
    int planes = 0; // real network input channels: 2*C*K
    int bins = 0;
    int frames = 0;
};

inline CwsShape cws_input_shape(double sample_rate, double seconds, int C, int K,
                                double frame_ms = 32.0, double hop_ms = 8.0) {
    const auto n = static_cast<std::size_t>(std::llround(sample_rate * seconds));
    const std::size_t band_len =
        K == 1 ? n : (n + static_cast<std::size_t>(K) - 1) / static_cast<std::size_t>(K);
    const double band_rate = sample_rate / K;
    CwsShape s;
    s.planes = 2 * C * K;
    s.bins = stft_frame_len(band_rate, frame_ms) / 2 + 1;
    s.frames = stft_frame_count(band_len, stft_hop(band_rate, hop_ms));
    return s;
}

} // namespace cwsep
