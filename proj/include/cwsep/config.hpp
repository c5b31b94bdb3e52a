#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "cwsep/errors.hpp"

namespace cwsep {

/// Training hyperparameters plus the model/chain description. Defaults
/// follow the reference configuration shipped in configs/default.conf;
/// intervals are literal seconds of training audio so tests can shrink the
/// 30 h / 2 h cadences.
struct TrainConfig {
    // optimization schedule
    double lr0 = 0.001;
    double dropout = 0.1;
    double decay_factor = 0.87;
    double decay_interval_seconds = 108000.0;  // 30 h of training audio
    double validate_interval_seconds = 7200.0; // 2 h of training audio
    int patience = 20;
    long max_steps = 1000000;

    // sampling
    double chunk_seconds = 3.0;
    int batch_size = 4;
    double gain_min = 0.6;
    double gain_max = 1.0;
    std::uint64_t seed = 1234;

    // channel-wise subband chain
    int K = 4;
    int channels = 2;
    int taps = 0; // 0: default_taps(K)
    double attenuation_db = 88.0;
    double frame_ms = 32.0;
    double hop_ms = 8.0;

    // model
    std::string arch = "unet"; // unet | mdensenet
    int scale = 5;
    int base_channels = 64;
    int width_cap = 336;
    int growth = 10;
    int block_layers = 4;
    int embed_channels = 8;

    // loss
    std::string conservation = "sum"; // sum | literal

    void validate() const {
        if (lr0 <= 0.0 || dropout < 0.0 || dropout >= 1.0) throw config_error("bad lr0/dropout");
        if (decay_factor <= 0.0 || decay_factor > 1.0) throw config_error("bad decay_factor");
        if (decay_interval_seconds <= 0.0 || validate_interval_seconds <= 0.0)
            throw config_error("intervals must be positive");
        if (patience < 1) throw config_error("patience must be at least 1");
        if (max_steps < 1) throw config_error("max_steps must be positive");
        if (chunk_seconds <= 0.0 || batch_size < 1) throw config_error("bad chunk/batch");
        if (K != 1 && K != 2 && K != 4 && K != 8) throw config_error("K must be one of {1,2,4,8}");
        if (channels < 1 || channels > 2) throw config_error("channels must be 1 or 2");
        if (arch != "unet" && arch != "mdensenet") throw config_error("arch must be unet or mdensenet");
        if (conservation != "sum" && conservation != "literal")
            throw config_error("conservation must be sum or literal");
        if (scale < 2) throw config_error("scale must be at least 2");
    }
};

/// key = value file with optional [section] headers and #/; comments.
/// Unknown keys are errors.
inline TrainConfig parse_train_config(std::istream& in, const std::string& origin) {
    TrainConfig cfg;
    std::map<std::string, std::string> raw;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line.erase(comment);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw config_error(origin + ":" + std::to_string(lineno) + ": unterminated section");
            continue; // sections organize the file; keys are globally unique
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error(origin + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw config_error(origin + ":" + std::to_string(lineno) + ": empty key or value");
        if (!raw.emplace(key, value).second)
            throw config_error(origin + ":" + std::to_string(lineno) + ": duplicate key " + key);
    }

    auto take = [&](const char* key, auto& out) {
        const auto it = raw.find(key);
        if (it == raw.end()) return;
        std::istringstream ss(it->second);
        ss >> out;
        if (ss.fail() || !(ss >> std::ws).eof())
            throw config_error(origin + ": cannot parse value for " + key + ": " + it->second);
        raw.erase(it);
    };

    take("lr0", cfg.lr0);
    take("dropout", cfg.dropout);
    take("decay_factor", cfg.decay_factor);
    take("decay_interval_seconds", cfg.decay_interval_seconds);
    take("validate_interval_seconds", cfg.validate_interval_seconds);
    take("patience", cfg.patience);
    take("max_steps", cfg.max_steps);
    take("chunk_seconds", cfg.chunk_seconds);
    take("batch_size", cfg.batch_size);
    take("seed", cfg.seed);
    take("K", cfg.K);
    take("channels", cfg.channels);
    take("taps", cfg.taps);
    take("attenuation_db", cfg.attenuation_db);
    take("frame_ms", cfg.frame_ms);
    take("hop_ms", cfg.hop_ms);
    take("arch", cfg.arch);
    take("scale", cfg.scale);
    take("base_channels", cfg.base_channels);
    take("width_cap", cfg.width_cap);
    take("growth", cfg.growth);
    take("block_layers", cfg.block_layers);
    take("embed_channels", cfg.embed_channels);
    take("conservation", cfg.conservation);

    if (!raw.empty()) throw config_error(origin + ": unknown key: " + raw.begin()->first);
    cfg.validate();
    return cfg;
}

inline TrainConfig load_train_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("load_train_config: cannot open " + path);
    return parse_train_config(f, path);
}

} // namespace cwsep
