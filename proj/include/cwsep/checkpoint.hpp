#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "cwsep/errors.hpp"
#include "cwsep/nn.hpp"

namespace cwsep {

constexpr char kCheckpointMagic[9] = "CWSEPCK1";
constexpr std::uint32_t kCheckpointVersion = 1;

/// FNV-1a over the builder meta string and every layer's kind, channel
/// counts and wiring. Dropout rates are excluded so train-time and
/// inference-time graphs of the same architecture match.
template <typename T>
std::uint64_t architecture_fingerprint(const NetworkGraph<T>& net) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 1099511628211ull;
        }
    };
    for (char c : net.meta) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    for (const LayerSpec& spec : net.layers) {
        mix(static_cast<std::uint64_t>(spec.kind));
        mix(static_cast<std::uint64_t>(spec.in_channels));
        mix(static_cast<std::uint64_t>(spec.out_channels));
        mix(static_cast<std::uint64_t>(spec.input + 1));
        mix(static_cast<std::uint64_t>(spec.skip + 1));
    }
    return h;
}

namespace ckptdetail {

template <typename T>
void write_array(std::ofstream& f, const std::vector<T>& v) {
    for (T x : v) {
        const float fv = static_cast<float>(x);
        std::uint32_t u;
        std::memcpy(&u, &fv, 4);
        const unsigned char bytes[4] = {
            static_cast<unsigned char>(u & 0xff), static_cast<unsigned char>((u >> 8) & 0xff),
            static_cast<unsigned char>((u >> 16) & 0xff), static_cast<unsigned char>((u >> 24) & 0xff)};
        f.write(reinterpret_cast<const char*>(bytes), 4);
    }
}

template <typename T>
void read_array(std::ifstream& f, std::vector<T>& v, const std::string& path) {
    for (auto& x : v) {
        unsigned char bytes[4];
        if (!f.read(reinterpret_cast<char*>(bytes), 4))
            throw format_error("load_checkpoint: truncated parameter data in " + path);
        const std::uint32_t u = static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
                                (static_cast<std::uint32_t>(bytes[2]) << 16) |
                                (static_cast<std::uint32_t>(bytes[3]) << 24);
        float fv;
        std::memcpy(&fv, &u, 4);
        x = static_cast<T>(fv);
    }
}

inline void write_u32(std::ofstream& f, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                                static_cast<unsigned char>((v >> 8) & 0xff),
                                static_cast<unsigned char>((v >> 16) & 0xff),
                                static_cast<unsigned char>((v >> 24) & 0xff)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ofstream& f, std::uint64_t v) {
    write_u32(f, static_cast<std::uint32_t>(v & 0xffffffffull));
    write_u32(f, static_cast<std::uint32_t>(v >> 32));
}

inline std::uint32_t read_u32(std::ifstream& f, const std::string& path) {
    unsigned char b[4];
    if (!f.read(reinterpret_cast<char*>(b), 4))
        throw format_error("load_checkpoint: truncated header in " + path);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint64_t read_u64(std::ifstream& f, const std::string& path) {
    const std::uint64_t lo = read_u32(f, path);
    const std::uint64_t hi = read_u32(f, path);
    return lo | (hi << 32);
}

} // namespace ckptdetail

/// Versioned binary container: magic, format version, architecture
/// fingerprint, then every parameter array (conv weights/biases, BN
/// affine terms and running stats) as little-endian float32 in declaration
/// order. Writes to a temp file and renames, so readers never see a
/// partial checkpoint.
template <typename T>
void save_checkpoint(const std::string& path, const NetworkGraph<T>& net) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw io_error("save_checkpoint: cannot open " + tmp);
        f.write(kCheckpointMagic, 8);
        ckptdetail::write_u32(f, kCheckpointVersion);
        ckptdetail::write_u64(f, architecture_fingerprint(net));
        for (const auto& p : net.params) {
            ckptdetail::write_array(f, p.w);
            ckptdetail::write_array(f, p.b);
            ckptdetail::write_array(f, p.gamma);
            ckptdetail::write_array(f, p.beta);
            ckptdetail::write_array(f, p.run_mean);
            ckptdetail::write_array(f, p.run_var);
        }
        if (!f) throw io_error("save_checkpoint: short write to " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

/// Loads parameters into an already-built graph of the same architecture.
template <typename T>
void load_checkpoint(const std::string& path, NetworkGraph<T>& net) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("load_checkpoint: cannot open " + path);
    char magic[8];
    if (!f.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw format_error("load_checkpoint: bad magic in " + path);
    const std::uint32_t version = ckptdetail::read_u32(f, path);
    if (version != kCheckpointVersion)
        throw format_error("load_checkpoint: unsupported version " + std::to_string(version));
    const std::uint64_t fp = ckptdetail::read_u64(f, path);
    const std::uint64_t want = architecture_fingerprint(net);
    if (fp != want)
        throw incompatibility_error("load_checkpoint: architecture fingerprint mismatch for " + path +
                                    " (graph " + net.meta + ")");
    for (auto& p : net.params) {
        ckptdetail::read_array(f, p.w, path);
        ckptdetail::read_array(f, p.b, path);
        ckptdetail::read_array(f, p.gamma, path);
        ckptdetail::read_array(f, p.beta, path);
        ckptdetail::read_array(f, p.run_mean, path);
        ckptdetail::read_array(f, p.run_var, path);
    }
    char extra;
    if (f.read(&extra, 1))
        throw format_error("load_checkpoint: trailing bytes in " + path);
}

} // namespace cwsep
