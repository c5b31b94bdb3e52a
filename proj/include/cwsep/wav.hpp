#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "cwsep/audio.hpp"
#include "cwsep/errors.hpp"

namespace cwsep {

enum class WavEncoding { pcm16, pcm24, float32 };

namespace detail {

inline std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline void put_u32(std::vector<unsigned char>& v, std::uint32_t x) {
    v.push_back(static_cast<unsigned char>(x & 0xff));
    v.push_back(static_cast<unsigned char>((x >> 8) & 0xff));
    v.push_back(static_cast<unsigned char>((x >> 16) & 0xff));
    v.push_back(static_cast<unsigned char>((x >> 24) & 0xff));
}
inline void put_u16(std::vector<unsigned char>& v, std::uint16_t x) {
    v.push_back(static_cast<unsigned char>(x & 0xff));
    v.push_back(static_cast<unsigned char>((x >> 8) & 0xff));
}

} // namespace detail

/// Read a RIFF/WAVE file. Supported encodings: PCM 16-bit, PCM 24-bit and
/// IEEE float 32-bit. Integer PCM is scaled to [-1, 1] by the encoding's
/// full-scale value (32768 and 8388608).
inline AudioClip read_wav(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("read_wav: cannot open " + path);

    unsigned char riff[12];
    if (!f.read(reinterpret_cast<char*>(riff), 12))
        throw format_error("read_wav: truncated RIFF header in " + path);
    if (std::memcmp(riff, "RIFF", 4) != 0 || std::memcmp(riff + 8, "WAVE", 4) != 0)
        throw format_error("read_wav: not a RIFF/WAVE file: " + path);

    bool have_fmt = false;
    std::uint16_t format_tag = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    std::vector<unsigned char> data;
    bool have_data = false;

    unsigned char ch[8];
    while (f.read(reinterpret_cast<char*>(ch), 8)) {
        const std::uint32_t size = detail::read_u32(ch + 4);
        if (std::memcmp(ch, "fmt ", 4) == 0) {
            if (size < 16) throw format_error("read_wav: fmt chunk too small in " + path);
            std::vector<unsigned char> fmt(size);
            if (!f.read(reinterpret_cast<char*>(fmt.data()), size))
                throw format_error("read_wav: truncated fmt chunk in " + path);
            format_tag = detail::read_u16(fmt.data());
            channels = detail::read_u16(fmt.data() + 2);
            rate = detail::read_u32(fmt.data() + 4);
            bits = detail::read_u16(fmt.data() + 14);
            have_fmt = true;
        } else if (std::memcmp(ch, "data", 4) == 0) {
            data.resize(size);
            if (size > 0 && !f.read(reinterpret_cast<char*>(data.data()), size))
                throw format_error("read_wav: truncated data chunk in " + path);
            have_data = true;
        } else {
            f.seekg(size, std::ios::cur); // skip unknown chunk
        }
        if (size & 1) f.seekg(1, std::ios::cur); // chunks are word-aligned
    }
    if (!have_fmt || !have_data) throw format_error("read_wav: missing fmt or data chunk in " + path);
    if (channels < 1 || rate == 0) throw format_error("read_wav: bad channel count or rate in " + path);

    WavEncoding enc;
    if (format_tag == 1 && bits == 16) enc = WavEncoding::pcm16;
    else if (format_tag == 1 && bits == 24) enc = WavEncoding::pcm24;
    else if (format_tag == 3 && bits == 32) enc = WavEncoding::float32;
    else
        throw format_error("read_wav: unsupported encoding (format " + std::to_string(format_tag) +
                           ", " + std::to_string(bits) + " bits) in " + path);

    const std::size_t bytes_per_sample = bits / 8u;
    const std::size_t frame_bytes = bytes_per_sample * channels;
    const std::size_t frames = frame_bytes ? data.size() / frame_bytes : 0;

    AudioClip clip(channels, frames, static_cast<int>(rate));
    const unsigned char* p = data.data();
    for (std::size_t n = 0; n < frames; ++n) {
        for (int c = 0; c < channels; ++c) {
            double v = 0.0;
            switch (enc) {
            case WavEncoding::pcm16: {
                auto s = static_cast<std::int16_t>(detail::read_u16(p));
                v = static_cast<double>(s) / 32768.0;
                break;
            }
            case WavEncoding::pcm24: {
                std::int32_t s = p[0] | (p[1] << 8) | (p[2] << 16);
                if (s & 0x800000) s |= static_cast<std::int32_t>(0xff000000);
                v = static_cast<double>(s) / 8388608.0;
                break;
            }
            case WavEncoding::float32: {
                std::uint32_t u = detail::read_u32(p);
                float fv;
                std::memcpy(&fv, &u, 4);
                v = static_cast<double>(fv);
                break;
            }
            }
            clip.samples[static_cast<std::size_t>(c)][n] = v;
            p += bytes_per_sample;
        }
    }
    return clip;
}

/// Write `clip` as RIFF/WAVE with the given encoding. Integer encodings
/// round to the nearest step and clamp at full scale; float32 is lossless.
inline void write_wav(const std::string& path, const AudioClip& clip, WavEncoding enc = WavEncoding::float32) {
    clip.require_valid("write_wav");

    const int channels = clip.channels();
    const std::size_t frames = clip.frames();
    const std::uint16_t bits = enc == WavEncoding::pcm16 ? 16 : enc == WavEncoding::pcm24 ? 24 : 32;
    const std::uint16_t tag = enc == WavEncoding::float32 ? 3 : 1;
    const std::uint16_t block = static_cast<std::uint16_t>(channels * bits / 8);
    const std::uint32_t data_size = static_cast<std::uint32_t>(frames * block);

    std::vector<unsigned char> out;
    out.reserve(44 + data_size);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    detail::put_u32(out, 36 + data_size);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    detail::put_u32(out, 16);
    detail::put_u16(out, tag);
    detail::put_u16(out, static_cast<std::uint16_t>(channels));
    detail::put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
    detail::put_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * block);
    detail::put_u16(out, block);
    detail::put_u16(out, bits);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    detail::put_u32(out, data_size);

    for (std::size_t n = 0; n < frames; ++n) {
        for (int c = 0; c < channels; ++c) {
            const double v = clip.samples[static_cast<std::size_t>(c)][n];
            switch (enc) {
            case WavEncoding::pcm16: {
                long s = std::lround(v * 32768.0);
                s = std::clamp(s, -32768L, 32767L);
                detail::put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(s)));
                break;
            }
            case WavEncoding::pcm24: {
                long s = std::lround(v * 8388608.0);
                s = std::clamp(s, -8388608L, 8388607L);
                const auto u = static_cast<std::uint32_t>(static_cast<std::int32_t>(s));
                out.push_back(static_cast<unsigned char>(u & 0xff));
                out.push_back(static_cast<unsigned char>((u >> 8) & 0xff));
                out.push_back(static_cast<unsigned char>((u >> 16) & 0xff));
                break;
            }
            case WavEncoding::float32: {
                const float fv = static_cast<float>(v);
                std::uint32_t u;
                std::memcpy(&u, &fv, 4);
                detail::put_u32(out, u);
                break;
            }
            }
        }
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw io_error("write_wav: cannot open " + path + " for writing");
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw io_error("write_wav: short write to " + path);
}

} // namespace cwsep
