#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "cwsep/errors.hpp"

namespace cwsep {

/// Multichannel PCM audio held channel-major. Samples are dimensionless
/// amplitudes, nominally in [-1, 1]; mixing may exceed that range.
struct AudioClip {
    std::vector<std::vector<double>> samples; // [channel][frame]
    int sample_rate = 0;

    AudioClip() = default;
    AudioClip(int channels, std::size_t frames, int rate)
        : samples(static_cast<std::size_t>(channels), std::vector<double>(frames, 0.0)),
          sample_rate(rate) {}

    int channels() const { return static_cast<int>(samples.size()); }
    std::size_t frames() const { return samples.empty() ? 0 : samples[0].size(); }
    double duration_seconds() const {
        return sample_rate > 0 ? static_cast<double>(frames()) / sample_rate : 0.0;
    }

    bool valid() const {
        if (sample_rate <= 0 || samples.empty()) return false;
        const std::size_t n = samples[0].size();
        for (const auto& ch : samples)
            if (ch.size() != n) return false;
        return true;
    }

    void require_valid(const std::string& who) const {
        if (!valid()) throw shape_error(who + ": invalid clip (ragged channels, no channels, or rate <= 0)");
    }
};

/// Copy of `clip` starting at `start` seconds, lasting `duration` seconds.
/// Offsets are rounded to the nearest sample.
inline AudioClip slice(const AudioClip& clip, double start, double duration) {
    clip.require_valid("slice");
    if (start < 0.0 || duration < 0.0) throw bounds_error("slice: negative start or duration");
    const auto off = static_cast<std::size_t>(std::llround(start * clip.sample_rate));
    const auto len = static_cast<std::size_t>(std::llround(duration * clip.sample_rate));
    if (off + len > clip.frames()) throw bounds_error("slice: window extends past end of clip");

    AudioClip out(clip.channels(), len, clip.sample_rate);
    for (int c = 0; c < clip.channels(); ++c)
        std::copy(clip.samples[c].begin() + static_cast<std::ptrdiff_t>(off),
                  clip.samples[c].begin() + static_cast<std::ptrdiff_t>(off + len),
                  out.samples[c].begin());
    return out;
}

/// Samplewise gain_a*a + gain_b*b. No clipping or normalization is applied.
inline AudioClip mix(const AudioClip& a, const AudioClip& b, double gain_a, double gain_b) {
    a.require_valid("mix");
    b.require_valid("mix");
    if (a.sample_rate != b.sample_rate) throw shape_error("mix: sample rates differ");
    if (a.channels() != b.channels()) throw shape_error("mix: channel counts differ");
    if (a.frames() != b.frames()) throw shape_error("mix: lengths differ");

    AudioClip out(a.channels(), a.frames(), a.sample_rate);
    for (int c = 0; c < a.channels(); ++c)
        for (std::size_t n = 0; n < a.frames(); ++n)
            out.samples[c][n] = gain_a * a.samples[c][n] + gain_b * b.samples[c][n];
    return out;
}

inline AudioClip scale(const AudioClip& a, double gain) {
    a.require_valid("scale");
    AudioClip out = a;
    for (auto& ch : out.samples)
        for (auto& v : ch) v *= gain;
    return out;
}

} // namespace cwsep
