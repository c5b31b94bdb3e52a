#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "cwsep/adam.hpp"
#include "cwsep/chain.hpp"
#include "cwsep/checkpoint.hpp"
#include "cwsep/config.hpp"
#include "cwsep/dataset.hpp"
#include "cwsep/losses.hpp"
#include "cwsep/nn_builders.hpp"

namespace cwsep {

struct BatchSample {
    AudioClip mixture, vocal, accompaniment;
    double gain_vocal = 0.0, gain_acc = 0.0;
};

struct StepLogEntry {
    long step = 0;
    double audio_seconds = 0.0;
    double lr = 0.0;
    double train_loss = 0.0;
    double valid_loss = std::numeric_limits<double>::quiet_NaN(); // NaN until first validation
};

struct TrainRecord {
    std::vector<StepLogEntry> steps;
    std::vector<double> validation_history;
    long best_validation_round = -1;
    double best_validation_loss = std::numeric_limits<double>::infinity();
    std::string best_checkpoint_path;
    std::string stop_reason;
    double audio_seconds_consumed = 0.0;
    long synthesize_calls = 0; // synthesis invocations during the loop; must stay 0
};

/// lr0 * decay^floor(consumed / interval)
inline double lr_at(double audio_seconds_consumed, const TrainConfig& cfg) {
    const double exponent = std::floor(audio_seconds_consumed / cfg.decay_interval_seconds);
    return cfg.lr0 * std::pow(cfg.decay_factor, exponent);
}

inline std::vector<LoadedEntry> load_songs(const DatasetIndex& index) {
    std::vector<LoadedEntry> songs;
    songs.reserve(index.entries.size());
    for (const auto& e : index.entries) songs.push_back(load_entry(e));
    return songs;
}

/// Augmentation draw: vocal and accompaniment chunks picked independently
/// (possibly from different songs), each scaled by a uniform gain in
/// [0.6, 1.0]; the mixture is their exact samplewise sum.
inline BatchSample sample_batch(const std::vector<LoadedEntry>& songs, std::mt19937_64& rng,
                                const TrainConfig& cfg) {
    if (songs.empty()) throw bounds_error("sample_batch: empty dataset");
    std::uniform_int_distribution<std::size_t> pick(0, songs.size() - 1);
    std::uniform_real_distribution<double> gain(0.6, 1.0);

    auto chunk_of = [&](const AudioClip& clip) {
        const double dur = clip.duration_seconds();
        if (dur < cfg.chunk_seconds)
            throw bounds_error("sample_batch: chunk longer than the shortest song");
        std::uniform_real_distribution<double> start(0.0, dur - cfg.chunk_seconds);
        return slice(clip, start(rng), cfg.chunk_seconds);
    };

    BatchSample s;
    const AudioClip& vsrc = songs[pick(rng)].vocals;
    AudioClip vchunk = chunk_of(vsrc);
    const AudioClip& asrc = songs[pick(rng)].accompaniment;
    AudioClip achunk = chunk_of(asrc);
    s.gain_vocal = gain(rng);
    s.gain_acc = gain(rng);
    s.vocal = scale(vchunk, s.gain_vocal);
    s.accompaniment = scale(achunk, s.gain_acc);
    s.mixture = mix(s.vocal, s.accompaniment, 1.0, 1.0);
    return s;
}

/// Builds the mask network described by a TrainConfig: 2*C*K real input
/// planes, sources*C*K = 2*C*K mask planes out.
inline NetworkGraph<double> build_from_config(const TrainConfig& cfg) {
    const int io = 2 * cfg.channels * cfg.K;
    if (cfg.arch == "unet")
        return build_unet<double>(cfg.scale, cfg.base_channels, io, io, cfg.dropout, cfg.width_cap,
                                  cfg.seed);
    return build_mdensenet<double>(io, io, cfg.scale, cfg.growth, cfg.block_layers,
                                   cfg.embed_channels, cfg.dropout, cfg.seed);
}

inline FilterBankPair bank_from_config(const TrainConfig& cfg) {
    const int taps = cfg.taps > 0 ? cfg.taps : default_taps(cfg.K);
    return design_filterbank(cfg.K, taps, cfg.attenuation_db);
}

namespace traindetail {

template <typename T>
void copy_sample_into_batch(const Tensor4<T>& sample, Tensor4<T>& batch, int slot) {
    std::copy(sample.data.begin(), sample.data.end(),
              batch.data.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(slot) *
                                                               sample.size()));
}

template <typename T>
Tensor4<T> batch_slot(const Tensor4<T>& batch, int slot) {
    Tensor4<T> out(1, batch.c, batch.h, batch.w);
    std::copy(batch.data.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(slot) * out.size()),
              batch.data.begin() +
                  static_cast<std::ptrdiff_t>(static_cast<std::size_t>(slot + 1) * out.size()),
              out.data.begin());
    return out;
}

struct PreparedSample {
    CwsTensor mixture;
    std::vector<CwsTensor> refs;
};

inline PreparedSample prepare(const BatchSample& s, const FilterBankPair& bank,
                              const TrainConfig& cfg) {
    PreparedSample p;
    p.mixture = cws_analyze(s.mixture, bank, cfg.frame_ms, cfg.hop_ms);
    p.refs.push_back(cws_analyze(s.vocal, bank, cfg.frame_ms, cfg.hop_ms));
    p.refs.push_back(cws_analyze(s.accompaniment, bank, cfg.frame_ms, cfg.hop_ms));
    return p;
}

/// Forward (and optionally backward) over a prepared batch; returns the
/// mean loss. Gradients are left in net.grads when backprop is requested.
inline double batch_pass(NetworkGraph<double>& net, const std::vector<PreparedSample>& batch,
                         const TrainConfig& cfg, bool backprop) {
    const int B = static_cast<int>(batch.size());
    const CwsTensor& first = batch[0].mixture;
    Tensor4<double> input(B, 2 * first.planes(), first.bins, first.frames);
    for (int b = 0; b < B; ++b)
        copy_sample_into_batch(cws_to_input<double>(batch[static_cast<std::size_t>(b)].mixture),
                               input, b);

    Tensor4<double> out = forward(net, input, backprop);
    Tensor4<double> dout(out.n, out.c, out.h, out.w);
    const bool literal = cfg.conservation == "literal";

    double loss = 0.0;
    for (int b = 0; b < B; ++b) {
        const auto& sample = batch[static_cast<std::size_t>(b)];
        const Tensor4<double> slot = batch_slot(out, b);
        std::vector<MaskTensor> masks = masks_from_output(slot, 2, sample.mixture);
        std::vector<MaskTensor> dmasks;
        const LossParts parts = masked_loss(masks, sample.mixture, sample.refs, literal,
                                            backprop ? &dmasks : nullptr);
        loss += parts.total / B;
        if (backprop) {
            Tensor4<double> dslot = mask_grads_to_output<double>(dmasks, sample.mixture);
            for (auto& v : dslot.data) v /= B;
            copy_sample_into_batch(dslot, dout, b);
        }
    }
    if (backprop) {
        zero_grads(net);
        backward(net, dout);
    }
    return loss;
}

} // namespace traindetail

/// Training loop: sample -> analyze -> stft -> pack -> forward -> L1 +
/// conservation loss -> backward -> Adam, with validation on a fixed
/// deterministic batch set every validate_interval_seconds of consumed
/// training audio and early stopping after `patience` non-improving
/// rounds. The best-validation checkpoint is kept under out_dir. The
/// synthesis side of the chain is never touched here.
inline TrainRecord fit(NetworkGraph<double>& net, const DatasetIndex& train_index,
                       const DatasetIndex& valid_index, const TrainConfig& cfg,
                       const std::string& out_dir,
                       const std::function<double(long round)>& validation_override = {}) {
    cfg.validate();
    std::filesystem::create_directories(out_dir);
    const std::vector<LoadedEntry> train_songs = load_songs(train_index);
    const std::vector<LoadedEntry> valid_songs = load_songs(valid_index);
    const FilterBankPair bank = bank_from_config(cfg);

    std::mt19937_64 rng(cfg.seed);
    AdamState adam;
    TrainRecord record;
    record.best_checkpoint_path = (std::filesystem::path(out_dir) / "best.ckpt").string();

    auto validation_loss = [&]() {
        std::mt19937_64 vrng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
        double acc = 0.0;
        const int rounds = 2;
        for (int r = 0; r < rounds; ++r) {
            std::vector<traindetail::PreparedSample> batch;
            for (int b = 0; b < cfg.batch_size; ++b)
                batch.push_back(traindetail::prepare(sample_batch(valid_songs, vrng, cfg), bank, cfg));
            acc += traindetail::batch_pass(net, batch, cfg, false);
        }
        return acc / rounds;
    };

    double next_validate = cfg.validate_interval_seconds;
    int rounds_since_improve = 0;
    bool stopped_early = false;
    const long synth_calls_at_start = synthesize_call_count().load();

    for (long step = 1; step <= cfg.max_steps && !stopped_early; ++step) {
        const double lr = lr_at(record.audio_seconds_consumed, cfg);
        std::vector<traindetail::PreparedSample> batch;
        for (int b = 0; b < cfg.batch_size; ++b)
            batch.push_back(traindetail::prepare(sample_batch(train_songs, rng, cfg), bank, cfg));

        const double loss = traindetail::batch_pass(net, batch, cfg, true);
        if (!std::isfinite(loss))
            throw numeric_error("fit: non-finite training loss at step " + std::to_string(step));
        adam_step(net, adam, lr);
        record.audio_seconds_consumed += static_cast<double>(cfg.batch_size) * cfg.chunk_seconds;

        StepLogEntry entry;
        entry.step = step;
        entry.audio_seconds = record.audio_seconds_consumed;
        entry.lr = lr;
        entry.train_loss = loss;
        if (!record.validation_history.empty()) entry.valid_loss = record.validation_history.back();

        while (record.audio_seconds_consumed >= next_validate && !stopped_early) {
            next_validate += cfg.validate_interval_seconds;
            const long round = static_cast<long>(record.validation_history.size());
            const double vloss =
                validation_override ? validation_override(round) : validation_loss();
            record.validation_history.push_back(vloss);
            entry.valid_loss = vloss;
            if (vloss < record.best_validation_loss) {
                record.best_validation_loss = vloss;
                record.best_validation_round =
                    static_cast<long>(record.validation_history.size()) - 1;
                save_checkpoint(record.best_checkpoint_path, net);
                rounds_since_improve = 0;
            } else if (++rounds_since_improve >= cfg.patience) {
                record.stop_reason = "early_stop";
                stopped_early = true;
            }
        }
        record.steps.push_back(entry);
    }
    if (!stopped_early) record.stop_reason = "step_budget";
    record.synthesize_calls = synthesize_call_count().load() - synth_calls_at_start;

    // a run too short to reach the first validation still leaves a usable model
    if (record.best_validation_round < 0) save_checkpoint(record.best_checkpoint_path, net);
    return record;
}

/// Line-oriented log: step, audio-seconds, lr, train loss, latest valid loss.
inline void write_train_log(const TrainRecord& record, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw io_error("write_train_log: cannot open " + path);
    char buf[160];
    for (const auto& e : record.steps) {
        if (std::isnan(e.valid_loss))
            std::snprintf(buf, sizeof(buf), "%ld %.3f %.8f %.10f -\n", e.step, e.audio_seconds, e.lr,
                          e.train_loss);
        else
            std::snprintf(buf, sizeof(buf), "%ld %.3f %.8f %.10f %.10f\n", e.step, e.audio_seconds,
                          e.lr, e.train_loss, e.valid_loss);
        f << buf;
    }
    f << "# stop_reason=" << record.stop_reason
      << " best_round=" << record.best_validation_round << '\n';
    if (!f) throw io_error("write_train_log: short write to " + path);
}

} // namespace cwsep
