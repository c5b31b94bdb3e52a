#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "cwsep/errors.hpp"
#include "cwsep/spectral.hpp"

namespace cwsep {

namespace lossdetail {

inline void require_same_geometry(const CwsTensor& a, const CwsTensor& b, const char* who) {
    if (a.C != b.C || a.K != b.K || a.frames != b.frames || a.bins != b.bins)
        throw shape_error(std::string(who) + ": tensor geometries disagree");
}

} // namespace lossdetail

/// Mean absolute error between source estimates and references, taken over
/// the complex modulus of the elementwise difference across all sources.
inline double l1_loss(const std::vector<CwsTensor>& est, const std::vector<CwsTensor>& ref) {
    if (est.size() != ref.size() || est.empty())
        throw shape_error("l1_loss: source counts disagree");
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < est.size(); ++j) {
        lossdetail::require_same_geometry(est[j], ref[j], "l1_loss");
        for (std::size_t i = 0; i < est[j].data.size(); ++i)
            acc += std::abs(est[j].data[i] - ref[j].data[i]);
        count += est[j].data.size();
    }
    return acc / static_cast<double>(count);
}

/// Mean absolute deviation of the summed estimates from the mixture,
/// reflecting y = x1 + x2.
inline double conservation_loss(const CwsTensor& est_vocal, const CwsTensor& est_acc,
                                const CwsTensor& mixture) {
    lossdetail::require_same_geometry(est_vocal, est_acc, "conservation_loss");
    lossdetail::require_same_geometry(est_vocal, mixture, "conservation_loss");
    double acc = 0.0;
    for (std::size_t i = 0; i < mixture.data.size(); ++i)
        acc += std::abs(est_vocal.data[i] + est_acc.data[i] - mixture.data[i]);
    return acc / static_cast<double>(mixture.data.size());
}

/// Literal per-source reading of the conservation term: every estimate is
/// pulled toward the mixture itself. Kept behind a switch for comparison.
inline double conservation_loss_literal(const std::vector<CwsTensor>& est, const CwsTensor& mixture) {
    if (est.empty()) throw shape_error("conservation_loss_literal: no sources");
    double acc = 0.0;
    std::size_t count = 0;
    for (const CwsTensor& e : est) {
        lossdetail::require_same_geometry(e, mixture, "conservation_loss_literal");
        for (std::size_t i = 0; i < mixture.data.size(); ++i)
            acc += std::abs(e.data[i] - mixture.data[i]);
        count += e.data.size();
    }
    return acc / static_cast<double>(count);
}

struct LossParts {
    double l1 = 0.0;
    double conservation = 0.0;
    double total = 0.0;
};

/// Total training objective L = L1 + Lc for two masks applied to one
/// mixture, with the gradient with respect to each mask. The estimates are
/// est_j = m_j * Y; references are the scaled source spectra.
inline LossParts masked_loss(const std::vector<MaskTensor>& masks, const CwsTensor& mixture,
                             const std::vector<CwsTensor>& refs, bool literal_conservation,
                             std::vector<MaskTensor>* dmasks) {
    if (masks.size() != 2 || refs.size() != 2)
        throw shape_error("masked_loss: expected exactly two sources");
    for (const CwsTensor& r : refs) lossdetail::require_same_geometry(r, mixture, "masked_loss");
    for (const MaskTensor& m : masks)
        if (m.C != mixture.C || m.K != mixture.K || m.frames != mixture.frames || m.bins != mixture.bins)
            throw shape_error("masked_loss: mask geometry disagrees with mixture");

    const std::size_t elems = mixture.data.size();
    const double l1_norm = 1.0 / static_cast<double>(2 * elems);
    const double lc_norm = literal_conservation ? l1_norm : 1.0 / static_cast<double>(elems);

    if (dmasks) {
        dmasks->assign(2, masks[0]);
        for (auto& dm : *dmasks) std::fill(dm.data.begin(), dm.data.end(), 0.0);
    }

    LossParts parts;
    for (std::size_t i = 0; i < elems; ++i) {
        const std::complex<double> y = mixture.data[i];
        const std::complex<double> est0 = masks[0].data[i] * y;
        const std::complex<double> est1 = masks[1].data[i] * y;

        const std::complex<double> d0 = est0 - refs[0].data[i];
        const std::complex<double> d1 = est1 - refs[1].data[i];
        parts.l1 += (std::abs(d0) + std::abs(d1)) * l1_norm;

        std::complex<double> c0, c1; // conservation residuals per source
        if (literal_conservation) {
            c0 = est0 - y;
            c1 = est1 - y;
            parts.conservation += (std::abs(c0) + std::abs(c1)) * lc_norm;
        } else {
            c0 = c1 = est0 + est1 - y;
            parts.conservation += std::abs(c0) * lc_norm;
        }

        if (dmasks) {
            auto slope = [&](const std::complex<double>& d) {
                const double mag = std::abs(d);
                if (mag < 1e-300) return 0.0;
                return (d.real() * y.real() + d.imag() * y.imag()) / mag;
            };
            (*dmasks)[0].data[i] += l1_norm * slope(d0) + lc_norm * slope(c0);
            (*dmasks)[1].data[i] += l1_norm * slope(d1) + lc_norm * slope(c1);
        }
    }
    parts.total = parts.l1 + parts.conservation;
    return parts;
}

} // namespace cwsep
