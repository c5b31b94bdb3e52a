#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "cwsep/errors.hpp"
#include "cwsep/wav.hpp"

namespace cwsep {

struct DatasetEntry {
    std::string song_id;
    std::string mixture_path;
    std::string vocals_path;
    std::string accompaniment_path;
};

/// Songs of one split, laid out on disk as
/// <root>/<split>/<song>/{mixture,vocals,accompaniment}.wav
struct DatasetIndex {
    std::string split;
    std::vector<DatasetEntry> entries;
};

struct LoadedEntry {
    AudioClip mixture;
    AudioClip vocals;
    AudioClip accompaniment;
};

inline DatasetIndex scan_dataset(const std::string& root, const std::string& split) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::path(root) / split;
    if (!fs::is_directory(dir)) throw io_error("scan_dataset: no such split directory: " + dir.string());

    DatasetIndex index;
    index.split = split;
    std::vector<fs::path> songs;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory()) songs.push_back(e.path());
    std::sort(songs.begin(), songs.end());

    for (const auto& song : songs) {
        DatasetEntry entry;
        entry.song_id = song.filename().string();
        entry.mixture_path = (song / "mixture.wav").string();
        entry.vocals_path = (song / "vocals.wav").string();
        entry.accompaniment_path = (song / "accompaniment.wav").string();
        for (const std::string* p : {&entry.mixture_path, &entry.vocals_path, &entry.accompaniment_path})
            if (!fs::is_regular_file(*p))
                throw io_error("scan_dataset: missing stem " + *p);
        index.entries.push_back(std::move(entry));
    }
    if (index.entries.empty()) throw io_error("scan_dataset: no songs under " + dir.string());
    return index;
}

/// Loads all three stems and checks they agree on rate, channels and length.
inline LoadedEntry load_entry(const DatasetEntry& entry) {
    LoadedEntry loaded{read_wav(entry.mixture_path), read_wav(entry.vocals_path),
                       read_wav(entry.accompaniment_path)};
    const AudioClip& m = loaded.mixture;
    for (const AudioClip* c : {&loaded.vocals, &loaded.accompaniment}) {
        if (c->sample_rate != m.sample_rate || c->channels() != m.channels() || c->frames() != m.frames())
            throw format_error("load_entry: stems of song '" + entry.song_id +
                               "' disagree on rate, channels or length");
    }
    return loaded;
}

} // namespace cwsep
