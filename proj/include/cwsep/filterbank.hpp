#pragma once

#include <atomic>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "cwsep/errors.hpp"
#include "cwsep/fft.hpp"

namespace cwsep {

/// Linear-phase lowpass prototype shared by all bands of one bank.
struct PrototypeFilter {
    std::vector<double> taps;
    double cutoff = 0.0; // normalized frequency, fraction of Nyquist
    double stopband_attenuation_db = 0.0;
};

/// K-band cosine-modulated FIR analysis/synthesis pair. K = 1 degenerates
/// to a unit-impulse passthrough with zero delay.
struct FilterBankPair {
    int K = 1;
    std::vector<std::vector<double>> analysis;
    std::vector<std::vector<double>> synthesis;
    int group_delay = 0; // full-rate samples across analyze+synthesize
    PrototypeFilter prototype;

    int taps() const { return analysis.empty() ? 0 : static_cast<int>(analysis[0].size()); }
};

/// K decimated band signals, each at source_rate / K.
struct SubbandSet {
    std::vector<std::vector<double>> bands;
    double source_rate = 0.0;
    int K = 1;
    std::size_t source_length = 0; // full-rate length before padding
};

namespace fbdetail {

inline double bessel_i0(double x) {
    // power series; converges quickly for the beta range used here
    double sum = 1.0, term = 1.0;
    const double half_x = x / 2.0;
    for (int k = 1; k < 64; ++k) {
        term *= (half_x / k) * (half_x / k);
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

inline double kaiser_beta(double atten_db) {
    if (atten_db > 50.0) return 0.1102 * (atten_db - 8.7);
    if (atten_db >= 21.0) return 0.5842 * std::pow(atten_db - 21.0, 0.4) + 0.07886 * (atten_db - 21.0);
    return 0.0;
}

/// Kaiser-windowed ideal lowpass, length L, cutoff wc in rad/sample.
inline std::vector<double> kaiser_lowpass(int L, double wc, double beta) {
    std::vector<double> h(static_cast<std::size_t>(L));
    const double mid = (L - 1) / 2.0;
    const double i0b = bessel_i0(beta);
    for (int n = 0; n < L; ++n) {
        const double t = n - mid;
        const double ideal = t == 0.0 ? wc / std::numbers::pi : std::sin(wc * t) / (std::numbers::pi * t);
        const double r = 2.0 * n / (L - 1) - 1.0;
        const double w = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0b;
        h[static_cast<std::size_t>(n)] = ideal * w;
    }
    return h;
}

inline double magnitude_at(const std::vector<double>& h, double w) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t n = 0; n < h.size(); ++n)
        acc += h[n] * std::exp(std::complex<double>(0.0, -w * static_cast<double>(n)));
    return std::abs(acc);
}

/// Squared zero-phase prototype response |P(w)|^2 on a uniform grid of
/// `grid` points over [0, 2*pi), via one zero-padded FFT.
inline std::vector<double> power_response(const std::vector<double>& p, int grid) {
    static thread_local int cached_grid = 0;
    static thread_local std::unique_ptr<RealFft> cached;
    if (cached_grid != grid) {
        cached = std::make_unique<RealFft>(grid);
        cached_grid = grid;
    }
    RealFft& fft = *cached;
    std::vector<double> padded(static_cast<std::size_t>(grid), 0.0);
    std::copy(p.begin(), p.end(), padded.begin());
    std::vector<std::complex<double>> spec(static_cast<std::size_t>(grid / 2 + 1));
    fft.forward(padded.data(), spec.data());

    std::vector<double> out(static_cast<std::size_t>(grid));
    for (int i = 0; i <= grid / 2; ++i) {
        const double m = std::norm(spec[static_cast<std::size_t>(i)]);
        out[static_cast<std::size_t>(i)] = m;
        if (i > 0 && i < grid) out[static_cast<std::size_t>(grid - i)] = m;
    }
    return out;
}

/// Peak-to-peak ripple of the composite response sum_k |H_k(w)|^2 over
/// [0, pi], relative to its mean. With the +-pi/4 modulation phases the
/// composite reduces exactly to sum_k |P(w - w_k)|^2 + |P(w + w_k)|^2.
inline double composite_ripple(const std::vector<double>& p, int K, int grid) {
    const auto pr2 = power_response(p, grid);
    auto at = [&](long idx) {
        idx %= grid;
        if (idx < 0) idx += grid;
        return pr2[static_cast<std::size_t>(idx)];
    };
    // band centers w_k = pi*(2k+1)/(2K) land on the grid when 4K divides grid
    const long quarter_band = grid / (4 * K);
    double tmin = 1e300, tmax = -1e300;
    for (long i = 0; i <= grid / 2; ++i) {
        double t = 0.0;
        for (int k = 0; k < K; ++k) {
            const long shift = quarter_band * (2 * k + 1);
            t += at(i - shift) + at(i + shift);
        }
        tmin = std::min(tmin, t);
        tmax = std::max(tmax, t);
    }
    const double mean = 0.5 * (tmin + tmax);
    return mean > 0.0 ? (tmax - tmin) / mean : 1e300;
}

inline std::vector<std::vector<double>> modulate(const std::vector<double>& p, int K, double phase_sign) {
    const int L = static_cast<int>(p.size());
    const double mid = (L - 1) / 2.0;
    std::vector<std::vector<double>> filters(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        const double theta = (k % 2 == 0 ? 1.0 : -1.0) * std::numbers::pi / 4.0 * phase_sign;
        auto& f = filters[static_cast<std::size_t>(k)];
        f.resize(static_cast<std::size_t>(L));
        for (int n = 0; n < L; ++n)
            f[static_cast<std::size_t>(n)] =
                2.0 * p[static_cast<std::size_t>(n)] *
                std::cos(std::numbers::pi / K * (k + 0.5) * (n - mid) + theta);
    }
    return filters;
}

} // namespace fbdetail

/// Count of synthesize() invocations; training asserts it never grows.
inline std::atomic<long>& synthesize_call_count() {
    static std::atomic<long> count{0};
    return count;
}

constexpr double kDefaultAttenuationDb = 88.0;

/// Default prototype length per band count. 32 taps per band keeps the
/// cascade above 60 dB reconstruction SNR for every supported K.
inline int default_taps(int K) { return K == 1 ? 1 : 32 * K; }

inline SubbandSet analyze(const std::vector<double>& signal, double sample_rate, const FilterBankPair& bank);
inline std::vector<double> synthesize(const SubbandSet& bands, const FilterBankPair& bank);

/// Designs the K-band pseudo-QMF pair: Kaiser-window lowpass prototype,
/// cutoff found by bisection so |P| at the band-edge frequency pi/(2K) is
/// -3 dB, then cosine modulation with alternating +-pi/4 phases. The
/// prototype is rescaled once so the full analyze->synthesize cascade has
/// unit gain.
inline FilterBankPair design_filterbank(int K, int L, double attenuation_db) {
    if (K != 1 && K != 2 && K != 4 && K != 8)
        throw bounds_error("design_filterbank: K must be one of {1,2,4,8}");

    if (K == 1) {
        FilterBankPair bank;
        bank.K = 1;
        bank.analysis = {{1.0}};
        bank.synthesis = {{1.0}};
        bank.group_delay = 0;
        bank.prototype.taps = {1.0};
        bank.prototype.cutoff = 1.0;
        bank.prototype.stopband_attenuation_db = attenuation_db;
        return bank;
    }

    if (L <= 0 || L % (2 * K) != 0)
        throw bounds_error("design_filterbank: tap count must be a positive multiple of 2K");
    if (attenuation_db < 40.0)
        throw bounds_error("design_filterbank: attenuation must be at least 40 dB");

    // Kaiser length/attenuation relation: the transition band must fit
    // inside one band width, otherwise the stopband leaks past the
    // adjacent band and aliasing can no longer cancel.
    const double max_transition = std::numbers::pi / K;
    const double needed_transition = (attenuation_db - 7.95) / (2.285 * (L - 1));
    if (needed_transition > max_transition) {
        const double achievable = 7.95 + 2.285 * (L - 1) * max_transition;
        throw design_error("design_filterbank: " + std::to_string(L) + " taps reach only " +
                               std::to_string(achievable) + " dB at K=" + std::to_string(K),
                           achievable);
    }

    const double beta = fbdetail::kaiser_beta(attenuation_db);
    const double w_edge = std::numbers::pi / (2.0 * K);
    const int grid = 8192; // multiple of 4K for every supported K

    // Scalar cutoff search near pi/(2K): coarse scan, then golden-section
    // refinement, minimizing the composite peak-to-peak ripple.
    auto ripple_at = [&](double wc) {
        return fbdetail::composite_ripple(fbdetail::kaiser_lowpass(L, wc, beta), K, grid);
    };
    double lo = 0.55 * w_edge, hi = std::min(1.45 * w_edge, std::numbers::pi);
    double best_wc = w_edge, best_r = 1e300;
    const int scan = 48;
    for (int i = 0; i <= scan; ++i) {
        const double wc = lo + (hi - lo) * i / scan;
        const double r = ripple_at(wc);
        if (r < best_r) {
            best_r = r;
            best_wc = wc;
        }
    }
    {
        double a = std::max(lo, best_wc - (hi - lo) / scan);
        double b = std::min(hi, best_wc + (hi - lo) / scan);
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
        double f1 = ripple_at(x1), f2 = ripple_at(x2);
        for (int it = 0; it < 48; ++it) {
            if (f1 < f2) {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - gr * (b - a);
                f1 = ripple_at(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + gr * (b - a);
                f2 = ripple_at(x2);
            }
        }
        best_wc = 0.5 * (a + b);
    }
    const double wc = best_wc;

    FilterBankPair bank;
    bank.K = K;
    bank.prototype.taps = fbdetail::kaiser_lowpass(L, wc, beta);
    bank.prototype.cutoff = wc / std::numbers::pi;
    bank.prototype.stopband_attenuation_db = attenuation_db;
    bank.analysis = fbdetail::modulate(bank.prototype.taps, K, +1.0);
    bank.synthesis = fbdetail::modulate(bank.prototype.taps, K, -1.0);
    bank.group_delay = L - 1;

    // Unit-gain calibration: push an impulse through the cascade and fold
    // the measured gain back into the prototype (split evenly across the
    // analysis and synthesis sides).
    {
        const std::size_t n0 = static_cast<std::size_t>(4 * L);
        std::vector<double> impulse(static_cast<std::size_t>(8 * L), 0.0);
        impulse[n0] = 1.0;
        const auto sb = analyze(impulse, 1.0, bank);
        const auto rec = synthesize(sb, bank);
        const double gain = rec[n0];
        if (!(gain > 0.0))
            throw numeric_error("design_filterbank: cascade gain calibration failed");
        const double s = 1.0 / std::sqrt(gain);
        for (auto& v : bank.prototype.taps) v *= s;
        bank.analysis = fbdetail::modulate(bank.prototype.taps, K, +1.0);
        bank.synthesis = fbdetail::modulate(bank.prototype.taps, K, -1.0);
    }
    return bank;
}

/// Filter with each H_k and keep every K-th sample. Input is zero-padded
/// to a multiple of K, so every band has ceil(N/K) samples.
inline SubbandSet analyze(const std::vector<double>& signal, double sample_rate, const FilterBankPair& bank) {
    SubbandSet out;
    out.K = bank.K;
    out.source_rate = sample_rate;
    out.source_length = signal.size();

    if (bank.K == 1) {
        out.bands = {signal};
        return out;
    }

    const int K = bank.K;
    const int L = bank.taps();
    const std::size_t n_pad = (signal.size() + static_cast<std::size_t>(K) - 1) /
                              static_cast<std::size_t>(K) * static_cast<std::size_t>(K);
    const std::size_t band_len = n_pad / static_cast<std::size_t>(K);

    out.bands.assign(static_cast<std::size_t>(K), std::vector<double>(band_len, 0.0));
    for (int k = 0; k < K; ++k) {
        const auto& h = bank.analysis[static_cast<std::size_t>(k)];
        auto& y = out.bands[static_cast<std::size_t>(k)];
        for (std::size_t m = 0; m < band_len; ++m) {
            const std::size_t n = m * static_cast<std::size_t>(K);
            double acc = 0.0;
            const int jmax = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(L - 1), n));
            for (int j = 0; j <= jmax; ++j) {
                const std::size_t idx = n - static_cast<std::size_t>(j);
                if (idx < signal.size()) acc += h[static_cast<std::size_t>(j)] * signal[idx];
            }
            y[m] = acc;
        }
    }
    return out;
}

/// Zero-stuff each band by K, filter with G_k, sum, then advance by the
/// group delay so the output lines up with the analyzed input. Output has
/// source_length samples.
inline std::vector<double> synthesize(const SubbandSet& bands, const FilterBankPair& bank) {
    synthesize_call_count()++;
    if (bands.K != bank.K) throw shape_error("synthesize: band count does not match bank");

    if (bank.K == 1) {
        std::vector<double> out = bands.bands.at(0);
        out.resize(bands.source_length, 0.0);
        return out;
    }

    const int K = bank.K;
    const int L = bank.taps();
    const std::size_t band_len = bands.bands.at(0).size();
    for (const auto& b : bands.bands)
        if (b.size() != band_len) throw shape_error("synthesize: ragged band lengths");

    const std::size_t n_pad = band_len * static_cast<std::size_t>(K);
    std::vector<double> full(n_pad + static_cast<std::size_t>(L), 0.0);
    for (int k = 0; k < K; ++k) {
        const auto& g = bank.synthesis[static_cast<std::size_t>(k)];
        const auto& y = bands.bands[static_cast<std::size_t>(k)];
        for (std::size_t m = 0; m < band_len; ++m) {
            const double v = y[m];
            if (v == 0.0) continue;
            double* dst = full.data() + m * static_cast<std::size_t>(K);
            for (int j = 0; j < L; ++j) dst[j] += g[static_cast<std::size_t>(j)] * v;
        }
    }

    const std::size_t delay = static_cast<std::size_t>(bank.group_delay);
    std::vector<double> out(bands.source_length, 0.0);
    for (std::size_t n = 0; n < out.size(); ++n) {
        const std::size_t src = n + delay;
        out[n] = src < full.size() ? full[src] : 0.0;
    }
    return out;
}

/// analyze->synthesize round trip with internal tail padding, so the
/// returned signal is valid over the entire input extent.
inline std::vector<double> reconstruct(const std::vector<double>& signal, double sample_rate,
                                       const FilterBankPair& bank) {
    if (bank.K == 1) return signal;
    const int L = bank.taps();
    std::vector<double> padded = signal;
    padded.resize(signal.size() + static_cast<std::size_t>(2 * L), 0.0);
    SubbandSet sb = analyze(padded, sample_rate, bank);
    std::vector<double> rec = synthesize(sb, bank);
    rec.resize(signal.size());
    return rec;
}

constexpr double kSnrCapDb = 120.0;

/// 10*log10(sum x^2 / sum (x - xhat)^2), capped to +-120 dB.
inline double reconstruction_snr(const std::vector<double>& original, const std::vector<double>& reconstructed) {
    if (original.size() != reconstructed.size())
        throw shape_error("reconstruction_snr: length mismatch");
    double sig = 0.0, err = 0.0;
    for (std::size_t n = 0; n < original.size(); ++n) {
        sig += original[n] * original[n];
        const double d = original[n] - reconstructed[n];
        err += d * d;
    }
    if (sig == 0.0) throw numeric_error("reconstruction_snr: all-zero reference");
    if (err == 0.0) return kSnrCapDb;
    const double snr = 10.0 * std::log10(sig / err);
    return std::min(std::max(snr, -kSnrCapDb), kSnrCapDb);
}

/// Plain-text coefficient dump: "K L attenuation" header line, then one
/// line of taps per filter, analysis filters first.
inline void save_filterbank(const std::string& path, const FilterBankPair& bank) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw io_error("save_filterbank: cannot open " + path);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", bank.prototype.stopband_attenuation_db);
    f << bank.K << ' ' << bank.taps() << ' ' << buf << '\n';
    auto write_filters = [&](const std::vector<std::vector<double>>& filters) {
        for (const auto& filt : filters) {
            for (std::size_t n = 0; n < filt.size(); ++n) {
                std::snprintf(buf, sizeof(buf), "%.17g", filt[n]);
                f << (n ? " " : "") << buf;
            }
            f << '\n';
        }
    };
    write_filters(bank.analysis);
    write_filters(bank.synthesis);
    if (!f) throw io_error("save_filterbank: short write to " + path);
}

inline FilterBankPair load_filterbank(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("load_filterbank: cannot open " + path);
    FilterBankPair bank;
    int L = 0;
    double atten = 0.0;
    if (!(f >> bank.K >> L >> atten)) throw format_error("load_filterbank: bad header in " + path);
    if (bank.K < 1 || L < 1) throw format_error("load_filterbank: bad K or L in " + path);
    bank.prototype.stopband_attenuation_db = atten;
    bank.group_delay = bank.K == 1 ? 0 : L - 1;
    auto read_filters = [&](std::vector<std::vector<double>>& filters) {
        filters.assign(static_cast<std::size_t>(bank.K), std::vector<double>(static_cast<std::size_t>(L)));
        for (auto& filt : filters)
            for (auto& v : filt)
                if (!(f >> v)) throw format_error("load_filterbank: truncated coefficients in " + path);
    };
    read_filters(bank.analysis);
    read_filters(bank.synthesis);
    return bank;
}

} // namespace cwsep
