#include <cstdio>
#include <random>
#include <vector>

#include "cwsep/filterbank.hpp"

using namespace cwsep;

int main() {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> noise(220500);
    for (auto& v : noise) v = dist(rng);

    for (int K : {2, 4, 8}) {
        for (int L : {64, 128, 192, 256, 384, 512}) {
            if (L % (2 * K) != 0) continue;
            for (double att : {60.0, 70.0, 80.0, 90.0, 100.0}) {
                try {
                    FilterBankPair bank = design_filterbank(K, L, att);
                    auto rec = reconstruct(noise, 44100.0, bank);
                    double snr = reconstruction_snr(noise, rec);
                    // tone sweep worst case
                    double worst = 1e9;
                    for (int i = 0; i < 50; ++i) {
                        const double f = 0.012 + 0.976 * i / 49.0; // fraction of Nyquist
                        std::vector<double> tone(66150);
                        for (std::size_t n = 0; n < tone.size(); ++n)
                            tone[n] = std::sin(3.14159265358979323846 * f * n);
                        auto trec = reconstruct(tone, 44100.0, bank);
                        worst = std::min(worst, reconstruction_snr(tone, trec));
                    }
                    std::printf("K=%d L=%3d att=%5.1f  noiseSNR=%7.2f dB  toneWorst=%7.2f dB\n",
                                K, L, att, snr, worst);
                } catch (const design_error& e) {
                    std::printf("K=%d L=%3d att=%5.1f  infeasible (achievable %.1f)\n", K, L, att,
                                e.achieved_attenuation_db);
                }
            }
        }
    }
    return 0;
}
