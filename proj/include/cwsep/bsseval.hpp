#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "cwsep/audio.hpp"
#include "cwsep/errors.hpp"

namespace cwsep {

constexpr double kMetricCapDb = 120.0;

/// est = s_target + e_interf + e_artif, from time-invariant orthogonal
/// projections onto the reference span.
struct Decomposition {
    std::vector<double> s_target, e_interf, e_artif;
    bool valid = true;
};

namespace bssdetail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

/// Solve G x = b in place by Gaussian elimination with partial pivoting.
/// Returns false when G is numerically singular.
inline bool solve(std::vector<std::vector<double>> g, std::vector<double> b,
                  std::vector<double>& x) {
    const std::size_t n = b.size();
    double scale = 0.0;
    for (const auto& row : g)
        for (double v : row) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return false;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(g[r][col]) > std::abs(g[pivot][col])) pivot = r;
        if (std::abs(g[pivot][col]) < 1e-12 * scale) return false;
        std::swap(g[col], g[pivot]);
        std::swap(b[col], b[pivot]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = g[r][col] / g[col][col];
            for (std::size_t c = col; c < n; ++c) g[r][c] -= f * g[col][c];
            b[r] -= f * b[col];
        }
    }
    x.assign(n, 0.0);
    for (std::size_t r = n; r-- > 0;) {
        double acc = b[r];
        for (std::size_t c = r + 1; c < n; ++c) acc -= g[r][c] * x[c];
        x[r] = acc / g[r][r];
    }
    return true;
}

} // namespace bssdetail

/// s_target: projection of est onto the target reference; e_interf: rest of
/// the projection onto span(refs); e_artif: residual. A zero-energy
/// reference or singular Gram matrix marks the decomposition invalid.
inline Decomposition decompose(const std::vector<double>& est,
                               const std::vector<std::vector<double>>& refs, std::size_t target) {
    if (refs.empty() || target >= refs.size()) throw bounds_error("decompose: bad target index");
    for (const auto& r : refs)
        if (r.size() != est.size()) throw shape_error("decompose: length mismatch");

    Decomposition d;
    const std::size_t n = est.size();
    const std::size_t J = refs.size();

    std::vector<std::vector<double>> gram(J, std::vector<double>(J, 0.0));
    std::vector<double> rhs(J, 0.0);
    for (std::size_t j = 0; j < J; ++j) {
        for (std::size_t k = j; k < J; ++k)
            gram[j][k] = gram[k][j] = bssdetail::dot(refs[j], refs[k]);
        rhs[j] = bssdetail::dot(refs[j], est);
        if (gram[j][j] == 0.0) {
            d.valid = false;
            return d;
        }
    }

    std::vector<double> coef;
    if (!bssdetail::solve(gram, rhs, coef)) {
        d.valid = false;
        return d;
    }

    d.s_target.assign(n, 0.0);
    d.e_interf.assign(n, 0.0);
    d.e_artif.assign(n, 0.0);
    const double target_gain = rhs[target] / gram[target][target];
    for (std::size_t i = 0; i < n; ++i) {
        double proj = 0.0;
        for (std::size_t j = 0; j < J; ++j) proj += coef[j] * refs[j][i];
        d.s_target[i] = target_gain * refs[target][i];
        d.e_interf[i] = proj - d.s_target[i];
        d.e_artif[i] = est[i] - proj;
    }
    return d;
}

struct Metrics {
    double sdr = 0.0, sir = 0.0, sar = 0.0;
    bool capped = false;
};

namespace bssdetail {

inline double ratio_db(double num, double den, bool& capped) {
    if (den <= 0.0) {
        capped = true;
        return kMetricCapDb;
    }
    if (num <= 0.0) {
        capped = true;
        return -kMetricCapDb;
    }
    const double v = 10.0 * std::log10(num / den);
    if (v > kMetricCapDb) {
        capped = true;
        return kMetricCapDb;
    }
    if (v < -kMetricCapDb) {
        capped = true;
        return -kMetricCapDb;
    }
    return v;
}

} // namespace bssdetail

/// sdr = ||s_t||^2 / ||e_i + e_a||^2, sir = ||s_t||^2 / ||e_i||^2,
/// sar = ||s_t + e_i||^2 / ||e_a||^2, all in dB capped at +-120.
inline Metrics metrics(const Decomposition& d) {
    if (!d.valid) throw state_error("metrics: invalid decomposition");
    const std::size_t n = d.s_target.size();
    double st = 0.0, ei = 0.0, ea = 0.0, eia = 0.0, stei = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        st += d.s_target[i] * d.s_target[i];
        ei += d.e_interf[i] * d.e_interf[i];
        ea += d.e_artif[i] * d.e_artif[i];
        const double both = d.e_interf[i] + d.e_artif[i];
        eia += both * both;
        const double kept = d.s_target[i] + d.e_interf[i];
        stei += kept * kept;
    }
    Metrics m;
    m.sdr = bssdetail::ratio_db(st, eia, m.capped);
    m.sir = bssdetail::ratio_db(st, ei, m.capped);
    m.sar = bssdetail::ratio_db(stei, ea, m.capped);
    return m;
}

struct WindowScore {
    int window = 0;
    int channel = 0;
    Metrics m;
};

struct SongScore {
    std::string song;
    std::vector<WindowScore> rows; // valid (window, channel) scores only
    int window_count = 0;
    int valid_windows = 0;
    // per-song aggregate: mean over valid windows of the channel-averaged metrics
    double sdr = std::numeric_limits<double>::quiet_NaN();
    double sir = std::numeric_limits<double>::quiet_NaN();
    double sar = std::numeric_limits<double>::quiet_NaN();
};

/// Windowed evaluation of one estimated source against the references,
/// window and hop in seconds (1 s / 1 s by default). Channels are
/// evaluated independently and averaged per window; windows with any
/// invalid channel decomposition are excluded.
inline SongScore eval_windowed(const AudioClip& est, const std::vector<AudioClip>& refs,
                               std::size_t target, double window_s = 1.0, double hop_s = 1.0,
                               const std::string& song_id = "") {
    est.require_valid("eval_windowed");
    for (const AudioClip& r : refs) {
        r.require_valid("eval_windowed");
        if (r.frames() != est.frames() || r.channels() != est.channels() ||
            r.sample_rate != est.sample_rate)
            throw shape_error("eval_windowed: estimate and references must be aligned");
    }

    const auto win = static_cast<std::size_t>(std::llround(window_s * est.sample_rate));
    const auto hop = static_cast<std::size_t>(std::llround(hop_s * est.sample_rate));
    if (win == 0 || hop == 0 || est.frames() < win)
        throw bounds_error("eval_windowed: signal shorter than one window");

    SongScore score;
    score.song = song_id;
    score.window_count = static_cast<int>((est.frames() - win) / hop) + 1;

    double acc_sdr = 0.0, acc_sir = 0.0, acc_sar = 0.0;
    for (int w = 0; w < score.window_count; ++w) {
        const std::size_t off = static_cast<std::size_t>(w) * hop;
        std::vector<WindowScore> channel_rows;
        bool window_valid = true;
        for (int c = 0; c < est.channels() && window_valid; ++c) {
            std::vector<double> e(est.samples[static_cast<std::size_t>(c)].begin() + static_cast<std::ptrdiff_t>(off),
                                  est.samples[static_cast<std::size_t>(c)].begin() + static_cast<std::ptrdiff_t>(off + win));
            std::vector<std::vector<double>> r;
            for (const AudioClip& ref : refs)
                r.emplace_back(ref.samples[static_cast<std::size_t>(c)].begin() + static_cast<std::ptrdiff_t>(off),
                               ref.samples[static_cast<std::size_t>(c)].begin() + static_cast<std::ptrdiff_t>(off + win));
            Decomposition d = decompose(e, r, target);
            if (!d.valid) {
                window_valid = false;
                break;
            }
            channel_rows.push_back({w, c, metrics(d)});
        }
        if (!window_valid) continue;

        ++score.valid_windows;
        double wsdr = 0.0, wsir = 0.0, wsar = 0.0;
        for (const WindowScore& row : channel_rows) {
            wsdr += row.m.sdr;
            wsir += row.m.sir;
            wsar += row.m.sar;
            score.rows.push_back(row);
        }
        acc_sdr += wsdr / est.channels();
        acc_sir += wsir / est.channels();
        acc_sar += wsar / est.channels();
    }

    if (score.valid_windows > 0) {
        score.sdr = acc_sdr / score.valid_windows;
        score.sir = acc_sir / score.valid_windows;
        score.sar = acc_sar / score.valid_windows;
    }
    return score;
}

struct TestSetScore {
    double sdr = std::numeric_limits<double>::quiet_NaN();
    double sir = std::numeric_limits<double>::quiet_NaN();
    double sar = std::numeric_limits<double>::quiet_NaN();
    int songs = 0;
};

inline double median(std::vector<double> v) {
    if (v.empty()) throw bounds_error("median: empty input");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Per set: median over songs of the per-song window means. Songs with no
/// valid window are skipped.
inline TestSetScore aggregate(const std::vector<SongScore>& songs) {
    if (songs.empty()) throw bounds_error("aggregate: no songs");
    std::vector<double> sdr, sir, sar;
    for (const SongScore& s : songs) {
        if (s.valid_windows == 0) continue;
        sdr.push_back(s.sdr);
        sir.push_back(s.sir);
        sar.push_back(s.sar);
    }
    TestSetScore t;
    t.songs = static_cast<int>(sdr.size());
    if (t.songs == 0) return t;
    t.sdr = median(sdr);
    t.sir = median(sir);
    t.sar = median(sar);
    return t;
}

/// Line-oriented evaluation report: per-row scores for both sources, then
/// the six-column summary (metric x source medians) and their average.
/// Vocal scores are tagged (V), accompaniment (A).
inline void write_eval_report(const std::string& path, const std::vector<SongScore>& vocal_scores,
                              const std::vector<SongScore>& acc_scores) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw io_error("write_eval_report: cannot open " + path);
    char buf[160];
    auto rows = [&](const std::vector<SongScore>& scores, const char* tag) {
        for (const SongScore& s : scores)
            for (const WindowScore& r : s.rows) {
                std::snprintf(buf, sizeof(buf), "%s %d %d SDR(%s) %.6f\n", s.song.c_str(), r.window,
                              r.channel, tag, r.m.sdr);
                f << buf;
                std::snprintf(buf, sizeof(buf), "%s %d %d SIR(%s) %.6f\n", s.song.c_str(), r.window,
                              r.channel, tag, r.m.sir);
                f << buf;
                std::snprintf(buf, sizeof(buf), "%s %d %d SAR(%s) %.6f\n", s.song.c_str(), r.window,
                              r.channel, tag, r.m.sar);
                f << buf;
            }
    };
    rows(vocal_scores, "V");
    rows(acc_scores, "A");

    const TestSetScore v = aggregate(vocal_scores);
    const TestSetScore a = aggregate(acc_scores);
    const double avg = (a.sar + v.sar + a.sdr + v.sdr + a.sir + v.sir) / 6.0;
    f << "# summary (median over songs of per-song window means; invalid windows skipped)\n";
    std::snprintf(buf, sizeof(buf),
                  "SAR(A) %.6f\nSAR(V) %.6f\nSDR(A) %.6f\nSDR(V) %.6f\nSIR(A) %.6f\nSIR(V) %.6f\n"
                  "Average %.6f\n",
                  a.sar, v.sar, a.sdr, v.sdr, a.sir, v.sir, avg);
    f << buf;
    if (!f) throw io_error("write_eval_report: short write to " + path);
}

} // namespace cwsep
