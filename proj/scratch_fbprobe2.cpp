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

    struct Cfg { int K, L; };
    for (Cfg c : {Cfg{2, 64}, Cfg{4, 128}, Cfg{8, 256}}) {
        for (double att : {82.0, 84.0, 86.0, 88.0, 90.0, 92.0, 94.0, 96.0}) {
            FilterBankPair bank = design_filterbank(c.K, c.L, att);
            auto rec = reconstruct(noise, 44100.0, bank);
            double snr = reconstruction_snr(noise, rec);
            double worst = 1e9;
            for (int i = 0; i < 50; ++i) {
                const double f = 0.012 + 0.976 * i / 49.0;
                std::vector<double> tone(66150);
                for (std::size_t n = 0; n < tone.size(); ++n)
                    tone[n] = std::sin(3.14159265358979323846 * f * n);
                auto trec = reconstruct(tone, 44100.0, bank);
                worst = std::min(worst, reconstruction_snr(tone, trec));
            }
            std::printf("K=%d L=%3d att=%5.1f  noise=%7.2f  toneWorst=%7.2f\n", c.K, c.L, att, snr, worst);
        }
    }
    return 0;
}
