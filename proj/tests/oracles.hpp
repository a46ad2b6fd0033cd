// Independent reference implementations used only by tests. Each one takes
// the slow, obviously-correct route so disagreements point at the library.
#ifndef SVESIM_TESTS_ORACLES_HPP
#define SVESIM_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "svesim/patterns.hpp"
#include "svesim/sensor.hpp"

namespace oracle {

// Every assignment of level indices to element slots, deduplicated by the
// sorted index multiset (two patterns are equivalent iff their multisets
// match).
inline std::set<std::vector<int>> brute_force_classes(int level_count, int element_count) {
    std::set<std::vector<int>> out;
    std::vector<int> assign(element_count, 0);
    for (;;) {
        std::vector<int> key = assign;
        std::sort(key.begin(), key.end());
        out.insert(std::move(key));
        int pos = element_count - 1;
        while (pos >= 0 && assign[pos] == level_count - 1) assign[pos--] = 0;
        if (pos < 0) break;
        ++assign[pos];
    }
    return out;
}

// Direct census on a tiled torus: place the 2x2 rank layout on a grid large
// enough to hold the window, center on a pixel of the requested rank, count
// cells whose rank is not in the saturated mask.
inline int window_census(int window, int center_rank, unsigned saturated_mask) {
    const int size = 2 * (window + 3);  // size/2 is even, preserving tile parity
    int cr = -1, cc = -1;
    for (int r = 0; r < 2 && cr < 0; ++r)
        for (int c = 0; c < 2; ++c)
            if (sve::canonical_rank_at(r, c) == center_rank) {
                cr = r + size / 2;
                cc = c + size / 2;
                break;
            }
    const int h = window / 2;
    int count = 0;
    for (int dr = -h; dr <= h; ++dr)
        for (int dc = -h; dc <= h; ++dc) {
            const int rank = sve::canonical_rank_at(cr + dr, cc + dc);
            if (!(saturated_mask & (1u << rank))) ++count;
        }
    return count;
}

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Exact first and second moments of the quantized readout code:
// Poisson photoelectrons plus deterministic dark charge, clipped at the full
// well, amplified, Gaussian read noise, then the floor quantizer with
// clamping. The Poisson sum runs over a +-10 sigma window plus the clipped
// tail; for each count the code distribution follows from normal CDFs at the
// quantizer boundaries.
inline Moments quantized_readout_moments(double theta, const sve::Level& lv,
                                         const sve::SensorConfig& cfg) {
    const double lambda = lv.tau * theta * cfg.qe;
    const double dark = lv.tau * cfg.dark_current;
    const double sigma = cfg.read_noise_base;
    const int max_code = cfg.max_code();

    auto code_moments = [&](double m, double& e1, double& e2) {
        // E[c] = sum_{c>=1} P(code >= c), E[c^2] = sum_{c>=1} (2c-1) P(code >= c),
        // P(code >= c) = P(X >= adc_lower + c lsb) for the clamped floor quantizer.
        e1 = 0.0;
        e2 = 0.0;
        for (int c = 1; c <= max_code; ++c) {
            const double boundary = cfg.adc_lower + c * cfg.adc_lsb_base;
            const double z = (boundary - m) / sigma;
            double surv;
            if (z < -9.0) {
                surv = 1.0;
            } else if (z > 9.0) {
                continue;  // this and all later boundaries contribute ~0
            } else {
                surv = 1.0 - normal_cdf(z);
            }
            e1 += surv;
            e2 += (2.0 * c - 1.0) * surv;
        }
    };

    const long long clip_n =
        static_cast<long long>(std::ceil(cfg.full_well - dark));  // counts at or past clip
    long long n_lo = 0, n_hi = 0;
    if (lambda > 0.0) {
        const double spread = 10.0 * std::sqrt(lambda) + 30.0;
        n_lo = std::max(0.0, std::floor(lambda - spread));
        n_hi = std::ceil(lambda + spread);
    }
    n_hi = std::min(n_hi, std::max<long long>(clip_n, 0));

    double m1 = 0.0, m2 = 0.0, mass = 0.0;
    for (long long n = n_lo; n <= n_hi; ++n) {
        double pmf;
        if (lambda > 0.0) {
            pmf = std::exp(-lambda + n * std::log(lambda) - std::lgamma(n + 1.0));
        } else {
            pmf = n == 0 ? 1.0 : 0.0;
        }
        if (pmf < 1e-18 && n > lambda) break;
        const double pre = std::min(static_cast<double>(n) + dark, cfg.full_well);
        double e1, e2;
        code_moments(pre * lv.alpha, e1, e2);
        m1 += pmf * e1;
        m2 += pmf * e2;
        mass += pmf;
    }
    const double tail = std::max(0.0, 1.0 - mass);
    if (tail > 0.0 && n_hi >= clip_n) {
        double e1, e2;
        code_moments(cfg.full_well * lv.alpha, e1, e2);
        m1 += tail * e1;
        m2 += tail * e2;
    }
    Moments out;
    out.mean = m1;
    out.variance = m2 - m1 * m1;
    return out;
}

// Plain-loop tone-mapped PSNR, sharing no code with the library.
inline double naive_mu_psnr(const std::vector<double>& a, const std::vector<double>& b,
                            double mu) {
    double mse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double ta = std::log1p(mu * std::clamp(a[i], 0.0, 1.0)) / std::log1p(mu);
        const double tb = std::log1p(mu * std::clamp(b[i], 0.0, 1.0)) / std::log1p(mu);
        mse += (ta - tb) * (ta - tb);
    }
    mse /= static_cast<double>(a.size());
    if (mse <= 0.0) return 99.0;
    return std::min(99.0, -10.0 * std::log10(mse));
}

}  // namespace oracle

#endif
