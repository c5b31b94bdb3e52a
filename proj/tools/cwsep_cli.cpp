// Command-line front end: filter-bank verification, training, separation,
// evaluation, and the cost profiler.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "cwsep/bsseval.hpp"
#include "cwsep/chain.hpp"
#include "cwsep/config.hpp"
#include "cwsep/cost.hpp"
#include "cwsep/dataset.hpp"
#include "cwsep/filterbank.hpp"
#include "cwsep/pipeline.hpp"
#include "cwsep/train.hpp"
#include "cwsep/wav.hpp"

namespace {

// sysexits-style codes, documented in the README
constexpr int kExitOk = 0;
constexpr int kExitDesignFailure = 2;
constexpr int kExitNonFiniteLoss = 3;
constexpr int kExitFingerprint = 4;
constexpr int kExitUsage = 64;
constexpr int kExitDataError = 65;
constexpr int kExitCantCreate = 73;

struct FbVerifyArgs {
    int k = 4;
    int taps = 0;
    double attenuation = cwsep::kDefaultAttenuationDb;
    std::string signal = "noise";
    std::string report;
    unsigned long seed = 7;
};

int cmd_fb_verify(const FbVerifyArgs& args) {
    using namespace cwsep;
    FilterBankPair bank;
    try {
        bank = design_filterbank(args.k, args.taps > 0 ? args.taps : default_taps(args.k),
                                 args.attenuation);
    } catch (const design_error& e) {
        std::fprintf(stderr, "fb-verify: design failed: %s\n", e.what());
        return kExitDesignFailure;
    }

    std::vector<std::vector<double>> channels;
    double rate = 44100.0;
    if (args.signal == "noise") {
        std::mt19937_64 rng(args.seed);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        std::vector<double> x(5 * 44100);
        for (auto& v : x) v = dist(rng);
        channels.push_back(std::move(x));
    } else {
        AudioClip clip = read_wav(args.signal);
        rate = clip.sample_rate;
        channels = clip.samples;
    }

    double snr = 1e9;
    for (const auto& ch : channels)
        snr = std::min(snr, reconstruction_snr(ch, reconstruct(ch, rate, bank)));

    double tone_worst = kSnrCapDb;
    if (args.k > 1) {
        for (int i = 0; i < 50; ++i) {
            const double f = 0.012 + 0.976 * i / 49.0; // fraction of Nyquist
            std::vector<double> tone(static_cast<std::size_t>(1.5 * rate));
            for (std::size_t m = 0; m < tone.size(); ++m)
                tone[m] = std::sin(std::numbers::pi * f * static_cast<double>(m));
            tone_worst = std::min(tone_worst, reconstruction_snr(tone, reconstruct(tone, rate, bank)));
        }
    }

    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "K %d\ntaps %d\nattenuation_db %.2f\nreconstruction_snr_db %.4f\n"
                  "tone_sweep_worst_db %.4f\n",
                  bank.K, bank.taps(), args.attenuation, snr, tone_worst);
    std::fputs(buf, stdout);
    if (!args.report.empty()) {
        std::ofstream f(args.report, std::ios::trunc);
        if (!f) {
            std::fprintf(stderr, "fb-verify: cannot write %s\n", args.report.c_str());
            return kExitCantCreate;
        }
        f << buf;
    }
    return snr >= 60.0 ? kExitOk : 1;
}

int cmd_train(const std::string& config_path, const std::string& data_root,
              const std::string& out_dir) {
    using namespace cwsep;
    TrainConfig cfg = load_train_config(config_path);
    DatasetIndex train = scan_dataset(data_root, "train");
    DatasetIndex valid = scan_dataset(data_root, "valid");

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    NetworkGraph<double> net = build_from_config(cfg);
    TrainRecord record = fit(net, train, valid, cfg, out_dir);
    write_train_log(record, (std::filesystem::path(out_dir) / "train_log.txt").string());
    std::printf("steps %zu\naudio_seconds %.3f\nstop_reason %s\nbest_checkpoint %s\n",
                record.steps.size(), record.audio_seconds_consumed, record.stop_reason.c_str(),
                record.best_checkpoint_path.c_str());
    return kExitOk;
}

struct SeparateArgs {
    std::string input, model, config, out;
    bool identity_mask = false;
};

int cmd_separate(const SeparateArgs& args) {
    using namespace cwsep;
    SeparationJob job;
    job.input_path = args.input;
    job.checkpoint_path = args.model;
    job.model = load_train_config(args.config);
    job.identity_mask = args.identity_mask;

    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(args.out, ec);
    const std::string probe = (fs::path(args.out) / ".write_probe").string();
    {
        std::ofstream p(probe, std::ios::trunc);
        if (!p) {
            std::fprintf(stderr, "separate: output directory not writable: %s\n", args.out.c_str());
            return kExitCantCreate;
        }
    }
    fs::remove(probe, ec);

    auto [vocal, acc] = separate(job);
    const std::string vocal_path = (fs::path(args.out) / "vocals.wav").string();
    const std::string acc_path = (fs::path(args.out) / "accompaniment.wav").string();
    write_wav(vocal_path, vocal, WavEncoding::float32);
    write_wav(acc_path, acc, WavEncoding::float32);
    std::printf("wrote %s and %s (%zu samples, %d Hz)\n", vocal_path.c_str(), acc_path.c_str(),
                vocal.frames(), vocal.sample_rate);
    return kExitOk;
}

int cmd_evaluate(const std::string& est_dir, const std::string& ref_dir,
                 const std::string& report_path) {
    using namespace cwsep;
    namespace fs = std::filesystem;
    if (!fs::is_directory(ref_dir)) throw io_error("evaluate: no such directory " + ref_dir);

    std::vector<fs::path> songs;
    for (const auto& e : fs::directory_iterator(ref_dir))
        if (e.is_directory() && fs::exists(e.path() / "vocals.wav") &&
            fs::exists(e.path() / "accompaniment.wav"))
            songs.push_back(e.path());
    std::sort(songs.begin(), songs.end());

    std::vector<SongScore> vocal_scores, acc_scores;
    for (const fs::path& song : songs) {
        const fs::path est_song = fs::path(est_dir) / song.filename();
        if (!fs::exists(est_song / "vocals.wav") || !fs::exists(est_song / "accompaniment.wav")) {
            std::fprintf(stderr, "evaluate: skipping %s (no matching estimates)\n",
                         song.filename().string().c_str());
            continue;
        }
        std::vector<AudioClip> refs = {read_wav((song / "vocals.wav").string()),
                                       read_wav((song / "accompaniment.wav").string())};
        AudioClip est_v = read_wav((est_song / "vocals.wav").string());
        AudioClip est_a = read_wav((est_song / "accompaniment.wav").string());
        vocal_scores.push_back(eval_windowed(est_v, refs, 0, 1.0, 1.0, song.filename().string()));
        acc_scores.push_back(eval_windowed(est_a, refs, 1, 1.0, 1.0, song.filename().string()));
    }
    if (vocal_scores.empty()) {
        std::fprintf(stderr, "evaluate: no overlapping songs between %s and %s\n", est_dir.c_str(),
                     ref_dir.c_str());
        return kExitDataError;
    }

    write_eval_report(report_path, vocal_scores, acc_scores);
    const TestSetScore v = aggregate(vocal_scores);
    const TestSetScore a = aggregate(acc_scores);
    std::printf("songs %d\nSAR(A) %.4f\nSAR(V) %.4f\nSDR(A) %.4f\nSDR(V) %.4f\nSIR(A) %.4f\n"
                "SIR(V) %.4f\nAverage %.4f\n",
                v.songs, a.sar, v.sar, a.sdr, v.sdr, a.sir, v.sir,
                (a.sar + v.sar + a.sdr + v.sdr + a.sir + v.sir) / 6.0);
    return kExitOk;
}

int cmd_profile(const std::string& arch, int k, double seconds, int channels) {
    using namespace cwsep;
    const int io = 2 * channels * k;
    NetworkGraph<float> net; // float graphs keep the 53 M profile lightweight
    if (arch == "unet5")
        net = build_unet<float>(5, 64, io, io);
    else if (arch == "unet6")
        net = build_unet<float>(6, 64, io, io, 0.0, 672);
    else
        net = build_mdensenet<float>(io, io);

    const CwsShape shape = cws_input_shape(44100.0, seconds, channels, k);
    const CostReport cost = count_flops(net, 1, shape.bins, shape.frames);
    std::printf("arch %s\nK %d\ninput_planes %d\nbins %d\nframes %d\nparams %lld\nparams_m %.4f\n"
                "flops %.0f\ngflops %.3f\n",
                arch.c_str(), k, shape.planes, shape.bins, shape.frames, cost.param_count,
                cost.param_count / 1e6, cost.flops, cost.flops / 1e9);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"channel-wise subband voice/accompaniment separation toolkit"};
    app.require_subcommand(1);

    FbVerifyArgs fb;
    CLI::App* fb_cmd = app.add_subcommand("fb-verify", "design a filter bank and verify reconstruction");
    fb_cmd->add_option("--k", fb.k, "band count")->check(CLI::IsMember({1, 2, 4, 8}))->required();
    fb_cmd->add_option("--taps", fb.taps, "filter length (0 = default for K)");
    fb_cmd->add_option("--attenuation", fb.attenuation, "stopband attenuation in dB");
    fb_cmd->add_option("--signal", fb.signal, "'noise' or a wav path");
    fb_cmd->add_option("--report", fb.report, "write the report to this path");
    fb_cmd->add_option("--seed", fb.seed, "noise seed");

    std::string train_config, train_data, train_out;
    CLI::App* train_cmd = app.add_subcommand("train", "train a separation model");
    train_cmd->add_option("--config", train_config)->required();
    train_cmd->add_option("--data", train_data)->required();
    train_cmd->add_option("--out", train_out)->required();

    SeparateArgs sep;
    CLI::App* sep_cmd = app.add_subcommand("separate", "split a mixture into vocals/accompaniment");
    sep_cmd->add_option("--input", sep.input)->required();
    sep_cmd->add_option("--model", sep.model, "checkpoint path");
    sep_cmd->add_option("--config", sep.config, "model configuration file")->required();
    sep_cmd->add_option("--out", sep.out)->required();
    sep_cmd->add_flag("--identity-mask", sep.identity_mask, "bypass the network (masks of ones)");

    std::string eval_est, eval_ref, eval_report;
    CLI::App* eval_cmd = app.add_subcommand("evaluate", "score estimates against references");
    eval_cmd->add_option("--est", eval_est)->required();
    eval_cmd->add_option("--ref", eval_ref)->required();
    eval_cmd->add_option("--report", eval_report)->required();

    std::string prof_arch = "unet5";
    int prof_k = 1, prof_channels = 2;
    double prof_seconds = 3.0;
    CLI::App* prof_cmd = app.add_subcommand("profile", "parameter and flop counts");
    prof_cmd->add_option("--arch", prof_arch)->check(CLI::IsMember({"unet5", "unet6", "mdn"}));
    prof_cmd->add_option("--k", prof_k)->check(CLI::IsMember({1, 2, 4, 8}));
    prof_cmd->add_option("--seconds", prof_seconds);
    prof_cmd->add_option("--channels", prof_channels)->check(CLI::IsMember({1, 2}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // prints help, exits 0
    } catch (const CLI::ParseError& e) {
        (void)app.exit(e);
        return kExitUsage;
    }

    try {
        if (fb_cmd->parsed()) return cmd_fb_verify(fb);
        if (train_cmd->parsed()) return cmd_train(train_config, train_data, train_out);
        if (sep_cmd->parsed()) {
            if (!sep.identity_mask && sep.model.empty()) {
                std::fprintf(stderr, "separate: --model is required without --identity-mask\n");
                return kExitUsage;
            }
            return cmd_separate(sep);
        }
        if (eval_cmd->parsed()) return cmd_evaluate(eval_est, eval_ref, eval_report);
        if (prof_cmd->parsed()) return cmd_profile(prof_arch, prof_k, prof_seconds, prof_channels);
    } catch (const cwsep::design_error& e) {
        std::fprintf(stderr, "error: %s (achieved %.1f dB)\n", e.what(), e.achieved_attenuation_db);
        return kExitDesignFailure;
    } catch (const cwsep::numeric_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNonFiniteLoss;
    } catch (const cwsep::incompatibility_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFingerprint;
    } catch (const cwsep::config_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitDataError;
    } catch (const cwsep::io_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitDataError;
    } catch (const cwsep::format_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitDataError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return kExitUsage;
}
