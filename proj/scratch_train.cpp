#include <chrono>
#include <cstdio>

#include "cwsep/bsseval.hpp"
#include "cwsep/cost.hpp"
#include "cwsep/pipeline.hpp"
#include "cwsep/train.hpp"
#include "helpers.hpp"

using namespace cwsep;

int main(int argc, char** argv) {
    const int fs = 8000;
    TrainConfig cfg;
    cfg.arch = "unet";
    cfg.scale = 2;
    cfg.base_channels = 16;
    cfg.K = 4;
    cfg.channels = 1;
    cfg.chunk_seconds = 2.0;
    cfg.batch_size = 2;
    cfg.dropout = 0.1;
    cfg.lr0 = 0.001;
    cfg.decay_interval_seconds = 3600.0;
    cfg.validate_interval_seconds = 120.0; // every 30 steps at batch 2 x 2 s
    cfg.patience = 20;
    cfg.max_steps = argc > 1 ? std::atol(argv[1]) : 200;
    cfg.seed = 7;

    const std::string root = testutil::write_synthetic_dataset("cwsep_scratch_ds", fs, 8.0, 2, 1);
    DatasetIndex train = scan_dataset(root, "train");
    DatasetIndex valid = scan_dataset(root, "valid");

    NetworkGraph<double> net = build_from_config(cfg);
    std::printf("params: %lld\n", count_params(net).param_count);

    auto t0 = std::chrono::steady_clock::now();
    TrainRecord rec = fit(net, train, valid, cfg, "/tmp/cwsep_scratch_out");
    auto t1 = std::chrono::steady_clock::now();
    const double secs = std::chrono::duration<double>(t1 - t0).count();
    std::printf("steps=%zu time=%.1fs (%.3f s/step) stop=%s\n", rec.steps.size(), secs,
                secs / rec.steps.size(), rec.stop_reason.c_str());
    for (std::size_t i = 0; i < rec.steps.size(); i += 1)
        std::printf("step %4ld loss %.6f lr %.6f\n", rec.steps[i].step, rec.steps[i].train_loss,
                    rec.steps[i].lr);
    std::printf("valid history:");
    for (double v : rec.validation_history) std::printf(" %.6f", v);
    std::printf("\n");

    // evaluate separation on the validation song vs mixture-as-estimate baseline
    DatasetIndex vidx = scan_dataset(root, "valid");
    LoadedEntry song = load_entry(vidx.entries[0]);
    const FilterBankPair bank = bank_from_config(cfg);

    NetworkGraph<double> best = build_from_config(cfg);
    load_checkpoint(rec.best_checkpoint_path, best);
    auto [est_v, est_a] = separate_clip(song.mixture, bank, cfg, network_mask_fn(best));

    std::vector<AudioClip> refs = {song.vocals, song.accompaniment};
    SongScore sv = eval_windowed(est_v, refs, 0);
    SongScore sa = eval_windowed(est_a, refs, 1);
    SongScore bv = eval_windowed(song.mixture, refs, 0);
    SongScore ba = eval_windowed(song.mixture, refs, 1);
    std::printf("SDR vocal: est %.2f dB vs baseline %.2f dB (delta %.2f)\n", sv.sdr, bv.sdr,
                sv.sdr - bv.sdr);
    std::printf("SDR acc:   est %.2f dB vs baseline %.2f dB (delta %.2f)\n", sa.sdr, ba.sdr,
                sa.sdr - ba.sdr);

    // oracle upper bound for reference
    OracleMasks om = oracle_masks(song.mixture, song.vocals, song.accompaniment, bank);
    AudioClip ov = cws_synthesize(apply_mask(om.vocal, om.mixture), bank, fs, song.mixture.frames());
    AudioClip oa = cws_synthesize(apply_mask(om.accompaniment, om.mixture), bank, fs,
                                  song.mixture.frames());
    std::printf("oracle SDR vocal %.2f acc %.2f\n", eval_windowed(ov, refs, 0).sdr,
                eval_windowed(oa, refs, 1).sdr);
    return 0;
}
