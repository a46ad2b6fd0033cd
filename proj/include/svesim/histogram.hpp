#ifndef SVESIM_HISTOGRAM_HPP
#define SVESIM_HISTOGRAM_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "svesim/image.hpp"
#include "svesim/patterns.hpp"
#include "svesim/sensor.hpp"

namespace sve {

// Positive floor substituted for zero radiance so the relative-error risk
// integrand 1 / theta^2 stays finite.
inline constexpr double kThetaFloor = 1e-9;

// Log-binned radiance density. Bin weights sum to 1 - saturated_fraction;
// the saturated mass has no usable estimate and is accounted at the top edge.
struct RadianceHistogram {
    std::vector<double> bin_edges;   // bins + 1, ascending, positive
    std::vector<double> weights;     // per-bin probability mass
    double saturated_fraction = 0.0;
    long long total_pixels = 0;

    int bins() const { return static_cast<int>(weights.size()); }
    double center(int b) const { return std::sqrt(bin_edges[b] * bin_edges[b + 1]); }
    bool all_saturated() const { return saturated_fraction >= 1.0; }

    void require_valid() const {
        if (bin_edges.size() != weights.size() + 1 || weights.empty())
            throw std::invalid_argument("RadianceHistogram: edge/weight size mismatch");
        for (std::size_t i = 0; i + 1 < bin_edges.size(); ++i)
            if (!(bin_edges[i] > 0.0) || !(bin_edges[i] < bin_edges[i + 1]))
                throw std::invalid_argument("RadianceHistogram: edges must be positive and ascending");
        double sum = saturated_fraction;
        for (double w : weights) {
            if (w < 0.0) throw std::invalid_argument("RadianceHistogram: negative weight");
            sum += w;
        }
        if (std::fabs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("RadianceHistogram: weights must sum to one");
    }
};

// Four-level probe pattern for histogram estimation: lowest product, the two
// middle ranks floor(L/2) and floor(L/2)+1 (1-based), and the highest product.
// Short level lists fall back to repeating the extremes.
inline CanonicalPattern pilot_pattern(const LevelSet& levels) {
    const int L = levels.count();
    int mid1 = std::max(1, L / 2);
    int mid2 = std::min(L, L / 2 + 1);
    const std::array<int, 4> ranks{1, mid1, mid2, L};  // 1-based
    Pattern p;
    for (int slot = 0; slot < 4; ++slot) {
        const Level l = levels.levels[ranks[slot] - 1];
        p.tau[slot] = l.tau;
        p.alpha[slot] = l.alpha;
    }
    return canonicalize(p);
}

namespace detail {

inline int log_bin_index(double v, double lo, double hi, int bins) {
    const double t = (std::log(v) - std::log(lo)) / (std::log(hi) - std::log(lo));
    int idx = static_cast<int>(std::floor(t * bins));
    return std::clamp(idx, 0, bins - 1);
}

// Degenerate single-bin histogram whose geometric center is exactly v.
inline RadianceHistogram point_histogram(double v, long long total_pixels) {
    RadianceHistogram h;
    const double eps = 1e-9;
    h.bin_edges = {v / (1.0 + eps), v * (1.0 + eps)};
    h.weights = {1.0};
    h.total_pixels = total_pixels;
    return h;
}

}  // namespace detail

// Histogram of a pilot capture. Within each 2x2 cell the estimate comes from
// the largest-product element that did not rail (the best-SNR valid readout),
// and all four pixels of the cell contribute at that estimate. Cells with no
// valid element join the saturated mass at the top edge, which sits at the
// saturation cutoff of the pattern's lowest-product element.
inline RadianceHistogram build_histogram(const RawCapture& pilot, int bins = 512) {
    if (bins <= 0) throw std::invalid_argument("build_histogram: bins must be positive");
    if (pilot.width <= 0 || pilot.height <= 0 || pilot.width % 2 != 0 || pilot.height % 2 != 0)
        throw std::invalid_argument("build_histogram: capture dimensions must be even");
    const SensorConfig& cfg = pilot.config;
    cfg.require_valid();
    pilot.pattern.require_valid();

    double min_product = pilot.pattern.level(0).product();
    double min_lsb = std::numeric_limits<double>::infinity();
    for (int s = 0; s < 4; ++s) {
        const Level l = pilot.pattern.level(s);
        min_product = std::min(min_product, l.product());
        min_lsb = std::min(min_lsb, cfg.adc_lsb_base / (l.alpha * l.tau * cfg.qe));
    }
    const double hi = cfg.v_max / min_product;     // last element to saturate
    const double lo = std::min(0.5 * min_lsb, hi * 0.5);  // finest resolvable step

    std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
    long long saturated_pixels = 0;
    const int maxcode = cfg.max_code();
    for (int r = 0; r < pilot.height; r += 2) {
        for (int c = 0; c < pilot.width; c += 2) {
            int best_slot = -1;
            double best_product = -1.0;
            for (int dr = 0; dr < 2; ++dr)
                for (int dc = 0; dc < 2; ++dc) {
                    if (pilot.at(r + dr, c + dc) >= maxcode) continue;
                    const int slot = Pattern::slot_of(r + dr, c + dc);
                    const double prod = pilot.pattern.level(slot).product();
                    if (prod > best_product) {
                        best_product = prod;
                        best_slot = slot;
                    }
                }
            if (best_slot < 0) {
                saturated_pixels += 4;
                continue;
            }
            const int dr = best_slot >> 1, dc = best_slot & 1;
            const NormalizedReadout nr =
                normalize_readout(pilot.at(r + dr, c + dc), pilot.pattern.level(best_slot), cfg);
            const double theta = std::clamp(nr.value, lo, hi);
            counts[detail::log_bin_index(theta, lo, hi, bins)] += 4.0;
        }
    }

    RadianceHistogram h;
    h.total_pixels = static_cast<long long>(pilot.width) * pilot.height;
    h.saturated_fraction = static_cast<double>(saturated_pixels) / h.total_pixels;
    h.bin_edges.resize(bins + 1);
    for (int b = 0; b <= bins; ++b)
        h.bin_edges[b] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * b / bins);
    h.weights.resize(bins);
    for (int b = 0; b < bins; ++b) h.weights[b] = counts[b] / h.total_pixels;
    return h;
}

// Exact histogram of a ground-truth radiance map. Zeros clamp to the lowest
// edge; a constant map degenerates to a single bin centered on its value.
// Explicit range overrides are available for controlled binning in tests.
inline RadianceHistogram histogram_from_radiance(const RadianceMap& map, int bins = 512,
                                                 double range_lo = 0.0, double range_hi = 0.0) {
    if (bins <= 0) throw std::invalid_argument("histogram_from_radiance: bins must be positive");
    map.require_valid();

    double lo = range_lo, hi = range_hi;
    if (lo <= 0.0 || hi <= 0.0) {
        double minpos = std::numeric_limits<double>::infinity();
        double maxval = 0.0;
        for (double v : map.values) {
            if (v > 0.0) minpos = std::min(minpos, v);
            maxval = std::max(maxval, v);
        }
        if (maxval <= 0.0) return detail::point_histogram(kThetaFloor, static_cast<long long>(map.size()));
        if (minpos == maxval) return detail::point_histogram(maxval, static_cast<long long>(map.size()));
        lo = range_lo > 0.0 ? range_lo : minpos;
        hi = range_hi > 0.0 ? range_hi : maxval;
    }
    if (!(lo < hi)) throw std::invalid_argument("histogram_from_radiance: range must satisfy lo < hi");

    RadianceHistogram h;
    h.total_pixels = static_cast<long long>(map.size());
    h.bin_edges.resize(bins + 1);
    for (int b = 0; b <= bins; ++b)
        h.bin_edges[b] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * b / bins);
    h.weights.assign(bins, 0.0);
    const double w = 1.0 / static_cast<double>(map.size());
    for (double v : map.values) {
        const double theta = std::clamp(v, lo, hi);
        h.weights[detail::log_bin_index(theta, lo, hi, bins)] += w;
    }
    return h;
}

}  // namespace sve

#endif
