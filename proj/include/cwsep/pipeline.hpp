#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "cwsep/chain.hpp"
#include "cwsep/checkpoint.hpp"
#include "cwsep/config.hpp"
#include "cwsep/train.hpp"
#include "cwsep/wav.hpp"

namespace cwsep {

/// One separation run: which file, which model, and how long inputs are
/// segmented. The model description must match the checkpoint fingerprint.
struct SeparationJob {
    std::string input_path;
    std::string checkpoint_path;
    TrainConfig model;
    std::string out_vocal_path;
    std::string out_accompaniment_path;
    double segment_seconds = 30.0;
    double crossfade_seconds = 1.0;
    bool identity_mask = false; // bypass the network, mask of all ones
};

using MaskFn = std::function<std::vector<MaskTensor>(const CwsTensor&)>;

namespace pipedetail {

inline std::pair<AudioClip, AudioClip> process_segment(const AudioClip& seg,
                                                       const FilterBankPair& bank,
                                                       const TrainConfig& cfg, const MaskFn& fn) {
    const CwsTensor mixture = cws_analyze(seg, bank, cfg.frame_ms, cfg.hop_ms);
    const std::vector<MaskTensor> masks = fn(mixture);
    if (masks.size() != 2) throw shape_error("separate: mask function must produce two sources");
    AudioClip vocal =
        cws_synthesize(apply_mask(masks[0], mixture), bank, seg.sample_rate, seg.frames());
    AudioClip acc =
        cws_synthesize(apply_mask(masks[1], mixture), bank, seg.sample_rate, seg.frames());
    return {std::move(vocal), std::move(acc)};
}

} // namespace pipedetail

/// Runs the full chain (analyze -> stft -> pack -> masks -> unpack ->
/// istft -> synthesize) over a clip. Long inputs are processed in
/// overlapping segments joined by a raised-cosine crossfade; outputs are
/// always length-matched to the input.
inline std::pair<AudioClip, AudioClip> separate_clip(const AudioClip& input,
                                                     const FilterBankPair& bank,
                                                     const TrainConfig& cfg, const MaskFn& fn,
                                                     double segment_seconds = 30.0,
                                                     double crossfade_seconds = 1.0) {
    input.require_valid("separate_clip");
    const std::size_t n = input.frames();
    const auto seg_len = static_cast<std::size_t>(std::llround(segment_seconds * input.sample_rate));
    const auto fade_len =
        static_cast<std::size_t>(std::llround(crossfade_seconds * input.sample_rate));
    if (seg_len == 0 || fade_len >= seg_len)
        throw bounds_error("separate_clip: crossfade must be shorter than the segment");

    if (n <= seg_len) return pipedetail::process_segment(input, bank, cfg, fn);

    AudioClip vocal(input.channels(), n, input.sample_rate);
    AudioClip acc(input.channels(), n, input.sample_rate);
    const std::size_t step = seg_len - fade_len;

    for (std::size_t start = 0; start < n; start += step) {
        std::size_t end = std::min(n, start + seg_len);
        if (n - end < seg_len / 4) end = n; // absorb short tails into this segment
        AudioClip seg(input.channels(), end - start, input.sample_rate);
        for (int c = 0; c < input.channels(); ++c)
            std::copy(input.samples[static_cast<std::size_t>(c)].begin() + static_cast<std::ptrdiff_t>(start),
                      input.samples[static_cast<std::size_t>(c)].begin() + static_cast<std::ptrdiff_t>(end),
                      seg.samples[static_cast<std::size_t>(c)].begin());
        auto [seg_vocal, seg_acc] = pipedetail::process_segment(seg, bank, cfg, fn);

        for (int c = 0; c < input.channels(); ++c)
            for (std::size_t i = 0; i < seg.frames(); ++i) {
                const std::size_t pos = start + i;
                double w = 1.0; // raised-cosine fade-in across the overlap
                if (start > 0 && i < fade_len)
                    w = 0.5 - 0.5 * std::cos(std::numbers::pi * (static_cast<double>(i) + 0.5) /
                                             static_cast<double>(fade_len));
                vocal.samples[static_cast<std::size_t>(c)][pos] =
                    (1.0 - w) * vocal.samples[static_cast<std::size_t>(c)][pos] +
                    w * seg_vocal.samples[static_cast<std::size_t>(c)][i];
                acc.samples[static_cast<std::size_t>(c)][pos] =
                    (1.0 - w) * acc.samples[static_cast<std::size_t>(c)][pos] +
                    w * seg_acc.samples[static_cast<std::size_t>(c)][i];
            }
        if (end == n) break;
    }
    return {std::move(vocal), std::move(acc)};
}

/// Mask provider backed by a trained network in inference mode.
template <typename T>
MaskFn network_mask_fn(NetworkGraph<T>& net) {
    return [&net](const CwsTensor& mixture) {
        Tensor4<T> x = cws_to_input<T>(mixture);
        Tensor4<T> out = forward(net, x, false);
        return masks_from_output(out, 2, mixture);
    };
}

inline MaskFn identity_mask_fn() {
    return [](const CwsTensor& mixture) {
        MaskTensor ones;
        ones.C = mixture.C;
        ones.K = mixture.K;
        ones.frames = mixture.frames;
        ones.bins = mixture.bins;
        ones.data.assign(static_cast<std::size_t>(ones.planes()) * ones.plane_size(), 1.0);
        return std::vector<MaskTensor>{ones, ones};
    };
}

/// Ideal-ratio-mask harness: masks built from the true source magnitudes,
/// an upper-bound baseline for the chain.
struct OracleMasks {
    CwsTensor mixture;
    MaskTensor vocal;
    MaskTensor accompaniment;
};

inline OracleMasks oracle_masks(const AudioClip& mixture, const AudioClip& vocal_ref,
                                const AudioClip& acc_ref, const FilterBankPair& bank,
                                double frame_ms = 32.0, double hop_ms = 8.0, double eps = 1e-8) {
    OracleMasks om;
    om.mixture = cws_analyze(mixture, bank, frame_ms, hop_ms);
    const CwsTensor v = cws_analyze(vocal_ref, bank, frame_ms, hop_ms);
    const CwsTensor a = cws_analyze(acc_ref, bank, frame_ms, hop_ms);

    auto make = [&](const CwsTensor& num) {
        MaskTensor m;
        m.C = om.mixture.C;
        m.K = om.mixture.K;
        m.frames = om.mixture.frames;
        m.bins = om.mixture.bins;
        m.data.resize(om.mixture.data.size());
        for (std::size_t i = 0; i < m.data.size(); ++i) {
            const double ratio =
                std::abs(num.data[i]) / (std::abs(v.data[i]) + std::abs(a.data[i]) + eps);
            m.data[i] = std::clamp(ratio, 0.0, 1.0);
        }
        return m;
    };
    om.vocal = make(v);
    om.accompaniment = make(a);
    return om;
}

/// End-to-end job: read the mixture, build the model, verify the
/// checkpoint fingerprint, separate, and return (vocal, accompaniment).
inline std::pair<AudioClip, AudioClip> separate(const SeparationJob& job) {
    AudioClip input = read_wav(job.input_path);
    if (input.channels() != job.model.channels)
        throw shape_error("separate: input has " + std::to_string(input.channels()) +
                          " channels, model expects " + std::to_string(job.model.channels));
    const FilterBankPair bank = bank_from_config(job.model);

    if (job.identity_mask)
        return separate_clip(input, bank, job.model, identity_mask_fn(), job.segment_seconds,
                             job.crossfade_seconds);

    NetworkGraph<double> net = build_from_config(job.model);
    load_checkpoint(job.checkpoint_path, net);
    return separate_clip(input, bank, job.model, network_mask_fn(net), job.segment_seconds,
                         job.crossfade_seconds);
}

} // namespace cwsep
