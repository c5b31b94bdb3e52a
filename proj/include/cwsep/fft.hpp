#pragma once

#include <complex>
#include <cstring>
#include <vector>

#include <fftw3.h>

#include "cwsep/errors.hpp"

namespace cwsep {

/// One-sided real FFT of fixed size, wrapping FFTW plans. Not copyable;
/// one instance per thread.
class RealFft {
public:
    explicit RealFft(int n) : n_(n) {
        if (n <= 0) throw bounds_error("RealFft: size must be positive");
        real_ = fftw_alloc_real(static_cast<std::size_t>(n));
        spec_ = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
        fwd_ = fftw_plan_dft_r2c_1d(n, real_, spec_, FFTW_ESTIMATE);
        inv_ = fftw_plan_dft_c2r_1d(n, spec_, real_, FFTW_ESTIMATE);
        if (!fwd_ || !inv_) throw numeric_error("RealFft: plan creation failed");
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;
    ~RealFft() {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
        fftw_free(real_);
        fftw_free(spec_);
    }

    int size() const { return n_; }
    int bins() const { return n_ / 2 + 1; }

    void forward(const double* in, std::complex<double>* out) {
        std::memcpy(real_, in, sizeof(double) * static_cast<std::size_t>(n_));
        fftw_execute(fwd_);
        for (int i = 0; i < bins(); ++i)
            out[i] = std::complex<double>(spec_[i][0], spec_[i][1]);
    }

    /// Inverse of forward(), normalized by 1/n.
    void inverse(const std::complex<double>* in, double* out) {
        for (int i = 0; i < bins(); ++i) {
            spec_[i][0] = in[i].real();
            spec_[i][1] = in[i].imag();
        }
        fftw_execute(inv_);
        const double scale = 1.0 / n_;
        for (int i = 0; i < n_; ++i) out[i] = real_[i] * scale;
    }

private:
    int n_;
    double* real_;
    fftw_complex* spec_;
    fftw_plan fwd_;
    fftw_plan inv_;
};

} // namespace cwsep
