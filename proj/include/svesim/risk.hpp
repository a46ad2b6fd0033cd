#ifndef SVESIM_RISK_HPP
#define SVESIM_RISK_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "svesim/histogram.hpp"
#include "svesim/image.hpp"
#include "svesim/patterns.hpp"
#include "svesim/sensor.hpp"

namespace sve {

// counts[s][rank]: number of pixels inside a window x window neighborhood of a
// pixel with the given product rank that remain unsaturated when the s
// largest-product elements of the tile are saturated.
struct NeighborCountTable {
    int window = 3;
    std::array<std::array<int, 4>, 4> counts{};

    int at(int rank, int saturated_count) const { return counts[saturated_count][rank]; }
};

// Closed-form window census. Offsets split by row/column parity into four
// classes (same tile position, column flipped, row flipped, both flipped);
// each class lands on one element of the 2x2 tiling, so the count is the
// class size summed over unmasked elements.
inline int count_unsaturated_in_window(int window, int center_rank, unsigned saturated_mask) {
    if (window < 1 || window % 2 == 0)
        throw std::invalid_argument("count_unsaturated_in_window: window must be odd and >= 1");
    if (center_rank < 0 || center_rank > 3)
        throw std::invalid_argument("count_unsaturated_in_window: rank out of range");
    const int h = window / 2;
    const int even_offsets = 2 * (h / 2) + 1;
    const int odd_offsets = 2 * ((h + 1) / 2);
    static constexpr int rank_row[4] = {0, 1, 0, 1};
    static constexpr int rank_col[4] = {0, 1, 1, 0};
    int total = 0;
    for (int pr = 0; pr < 2; ++pr) {
        for (int pc = 0; pc < 2; ++pc) {
            const int rank = canonical_rank_at(rank_row[center_rank] + pr, rank_col[center_rank] + pc);
            if (saturated_mask & (1u << rank)) continue;
            total += (pr == 0 ? even_offsets : odd_offsets) * (pc == 0 ? even_offsets : odd_offsets);
        }
    }
    return total;
}

inline NeighborCountTable build_neighbor_table(int window = 3) {
    NeighborCountTable t;
    t.window = window;
    for (int s = 0; s < 4; ++s) {
        // the s largest products saturate first: ranks 4-s .. 3
        const unsigned mask = (0xFu & ~((1u << (4 - s)) - 1u));
        for (int rank = 0; rank < 4; ++rank)
            t.counts[s][rank] = count_unsaturated_in_window(window, rank, mask);
    }
    return t;
}

inline NeighborCountTable unit_neighbor_table(int window = 3) {
    NeighborCountTable t;
    t.window = window;
    for (auto& row : t.counts) row.fill(1);
    return t;
}

struct RiskValue {
    double recoverable = 0.0;
    double nonrecoverable = 0.0;

    double total() const { return recoverable + nonrecoverable; }
    bool infinite() const { return std::isinf(recoverable) || std::isinf(nonrecoverable); }
};

// Saturation cutoffs by product rank, descending: rank ell saturates once
// theta exceeds v_max / (alpha_ell tau_ell). Equality stays unsaturated.
inline std::array<double, 4> saturation_cutoffs(const CanonicalPattern& cp, const SensorConfig& cfg) {
    std::array<double, 4> c{};
    for (int rank = 0; rank < 4; ++rank) c[rank] = cfg.v_max / canonical_level(cp, rank).product();
    return c;
}

namespace detail {

// Input-referred estimation variance of one level at radiance theta:
// shot and dark charge over the exposure plus read noise referred through
// gain and exposure.
inline double level_variance(double theta, const Level& lv, const SensorConfig& cfg) {
    const double at = lv.alpha * lv.tau;
    return (theta + cfg.dark_current) / lv.tau +
           cfg.read_noise_base * cfg.read_noise_base / (at * at);
}

}  // namespace detail

// Reciprocal of the mean per-pixel SNR. Saturated pixels (expected post-gain
// signal above v_max) contribute zero SNR; an entirely saturated scene has no
// finite risk and reports +infinity.
inline RiskValue snr_risk(const RadianceMap& scene, const Pattern& pattern, const SensorConfig& cfg) {
    scene.require_valid();
    cfg.require_valid();
    const CanonicalPattern cp = canonicalize(pattern);
    double snr_sum = 0.0;
    for (int r = 0; r < scene.height; ++r) {
        for (int c = 0; c < scene.width; ++c) {
            const Level lv = cp.pattern.level_at(r, c);
            const double theta = scene.at(r, c);
            const double signal = lv.alpha * lv.tau * theta;
            if (signal > cfg.v_max) continue;
            const double var = lv.alpha * lv.alpha * (lv.tau * theta + cfg.dark_current) +
                               cfg.read_noise_base * cfg.read_noise_base;
            if (var > 0.0) snr_sum += signal / std::sqrt(var);
        }
    }
    RiskValue out;
    const double mean = snr_sum / static_cast<double>(scene.size());
    out.recoverable = mean > 0.0 ? 1.0 / mean : std::numeric_limits<double>::infinity();
    return out;
}

// SNR risk augmented with the measured squared error of saturated pixels.
// The reciprocal term uses the same mean as snr_risk; once no pixel remains
// unsaturated it is dropped so the saturation error alone drives the value.
// The readout defaults to a noise-free capture of the scene.
inline RiskValue snr_mse_risk(const RadianceMap& scene, const Pattern& pattern,
                              const SensorConfig& cfg, const RawCapture* readout = nullptr) {
    scene.require_valid();
    scene.require_even_dims();
    cfg.require_valid();
    const CanonicalPattern cp = canonicalize(pattern);
    RawCapture synthesized;
    if (readout == nullptr) {
        synthesized = simulate_capture(scene, cp.pattern, cfg, 0, /*noise=*/false);
        readout = &synthesized;
    } else if (readout->width != scene.width || readout->height != scene.height) {
        throw std::invalid_argument("snr_mse_risk: readout dimensions do not match the scene");
    }

    double snr_sum = 0.0;
    double sq_err = 0.0;
    bool any_unsaturated = false;
    for (int r = 0; r < scene.height; ++r) {
        for (int c = 0; c < scene.width; ++c) {
            const Level lv = cp.pattern.level_at(r, c);
            const double theta = scene.at(r, c);
            const double signal = lv.alpha * lv.tau * theta;
            if (signal > cfg.v_max) {
                const NormalizedReadout nr = normalize_readout(readout->at(r, c), lv, cfg);
                const double err = nr.value - theta;
                sq_err += err * err;
            } else {
                any_unsaturated = true;
                const double var = lv.alpha * lv.alpha * (lv.tau * theta + cfg.dark_current) +
                                   cfg.read_noise_base * cfg.read_noise_base;
                if (var > 0.0) snr_sum += signal / std::sqrt(var);
            }
        }
    }
    RiskValue out;
    const double n = static_cast<double>(scene.size());
    out.nonrecoverable = sq_err / n;
    if (any_unsaturated) {
        const double mean = snr_sum / n;
        out.recoverable = mean > 0.0 ? 1.0 / mean : std::numeric_limits<double>::infinity();
    }
    return out;
}

namespace detail {

struct HistRiskTerms {
    double recoverable = 0.0;
    double nonrecoverable = 0.0;
};

// Density-form integrand at one radiance value. With ranks sorted by product
// and cutoffs descending, the unsaturated set is always a prefix 0..ell-1.
// Unsaturated ranks contribute their own relative variance over their window
// count; saturated ranks recover through the rank-0 estimate; once even rank 0
// saturates the residual is the squared distance to its cutoff.
inline HistRiskTerms hist_risk_at(double theta, double weight,
                                  const std::array<Level, 4>& by_rank,
                                  const std::array<double, 4>& cutoffs,
                                  const NeighborCountTable& table, const SensorConfig& cfg) {
    HistRiskTerms out;
    if (theta > cutoffs[0]) {
        const double miss = cutoffs[0] - theta;
        out.nonrecoverable = weight * miss * miss;
        return out;
    }
    int ell = 0;
    while (ell < 4 && theta <= cutoffs[ell]) ++ell;
    const int s = 4 - ell;
    const double t = std::max(theta, kThetaFloor);
    double sum = 0.0;
    for (int j = 0; j < ell; ++j)
        sum += level_variance(t, by_rank[j], cfg) / table.at(j, s);
    sum += (4 - ell) * level_variance(t, by_rank[0], cfg) / table.at(0, s);
    out.recoverable = weight * sum / (4.0 * t * t);
    return out;
}

}  // namespace detail

// Expected per-pixel risk integrated against a radiance histogram. Bin mass
// is evaluated at the geometric bin center; the saturated remainder of the
// histogram sits at its top edge.
inline RiskValue sve_risk_hist(const RadianceHistogram& hist, const Pattern& pattern,
                               const SensorConfig& cfg, const NeighborCountTable& table) {
    hist.require_valid();
    cfg.require_valid();
    const CanonicalPattern cp = canonicalize(pattern);
    const std::array<double, 4> cutoffs = saturation_cutoffs(cp, cfg);
    std::array<Level, 4> by_rank;
    for (int rank = 0; rank < 4; ++rank) by_rank[rank] = canonical_level(cp, rank);

    RiskValue out;
    for (int b = 0; b < hist.bins(); ++b) {
        const double w = hist.weights[b];
        if (w <= 0.0) continue;
        const auto terms = detail::hist_risk_at(hist.center(b), w, by_rank, cutoffs, table, cfg);
        out.recoverable += terms.recoverable;
        out.nonrecoverable += terms.nonrecoverable;
    }
    if (hist.saturated_fraction > 0.0) {
        const auto terms = detail::hist_risk_at(hist.bin_edges.back(), hist.saturated_fraction,
                                                by_rank, cutoffs, table, cfg);
        out.recoverable += terms.recoverable;
        out.nonrecoverable += terms.nonrecoverable;
    }
    return out;
}

// Ablated variant: identical integrand with every neighbor count forced to 1,
// so recoverability by neighbors is ignored.
inline RiskValue sve_risk_wo(const RadianceHistogram& hist, const Pattern& pattern,
                             const SensorConfig& cfg, const NeighborCountTable& table) {
    return sve_risk_hist(hist, pattern, cfg, unit_neighbor_table(table.window));
}

// Reference spatial form: per-pixel risk summed over the actual image, with
// saturation decided against each pixel's own cutoff and neighborhoods taken
// on the tiling with periodic wrap (even dimensions preserve tile parity).
// Saturated pixels fall back to the worst unsaturated neighbor in the window;
// with no such neighbor the distance to their own cutoff is unrecoverable.
inline RiskValue sve_risk_pixelwise(const RadianceMap& scene, const Pattern& pattern,
                                    const SensorConfig& cfg, const NeighborCountTable& table) {
    scene.require_valid();
    scene.require_even_dims();
    cfg.require_valid();
    const CanonicalPattern cp = canonicalize(pattern);
    const std::array<double, 4> cutoffs = saturation_cutoffs(cp, cfg);
    std::array<Level, 4> by_rank;
    for (int rank = 0; rank < 4; ++rank) by_rank[rank] = canonical_level(cp, rank);

    const int W = scene.width, H = scene.height;
    const int h = table.window / 2;
    std::vector<std::uint8_t> sat(scene.size());
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c)
            sat[static_cast<std::size_t>(r) * W + c] =
                scene.at(r, c) > cutoffs[canonical_rank_at(r, c)] ? 1 : 0;

    // per-pixel unsaturated-neighbor counts, periodic
    std::vector<int> census(scene.size());
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            int n = 0;
            for (int dr = -h; dr <= h; ++dr) {
                const int rr = (r + dr + H) % H;
                for (int dc = -h; dc <= h; ++dc) {
                    const int cc = (c + dc + W) % W;
                    n += sat[static_cast<std::size_t>(rr) * W + cc] == 0 ? 1 : 0;
                }
            }
            census[static_cast<std::size_t>(r) * W + c] = n;
        }
    }

    auto relative_variance = [&](int r, int c) {
        const double t = std::max(scene.at(r, c), kThetaFloor);
        const double v = detail::level_variance(t, by_rank[canonical_rank_at(r, c)], cfg);
        return v / (t * t * census[static_cast<std::size_t>(r) * W + c]);
    };

    RiskValue out;
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            if (!sat[static_cast<std::size_t>(r) * W + c]) {
                out.recoverable += relative_variance(r, c);
                continue;
            }
            double worst = -1.0;
            for (int dr = -h; dr <= h; ++dr) {
                const int rr = (r + dr + H) % H;
                for (int dc = -h; dc <= h; ++dc) {
                    const int cc = (c + dc + W) % W;
                    if (sat[static_cast<std::size_t>(rr) * W + cc]) continue;
                    worst = std::max(worst, relative_variance(rr, cc));
                }
            }
            if (worst >= 0.0) {
                out.recoverable += worst;
            } else {
                const double miss = cutoffs[canonical_rank_at(r, c)] - scene.at(r, c);
                out.nonrecoverable += miss * miss;
            }
        }
    }
    return out;
}

enum class RiskEstimator { Sve, SveWo, Snr, SnrMse };

inline const char* risk_estimator_name(RiskEstimator e) {
    switch (e) {
        case RiskEstimator::Sve: return "sve";
        case RiskEstimator::SveWo: return "sve-wo";
        case RiskEstimator::Snr: return "snr";
        case RiskEstimator::SnrMse: return "snr-mse";
    }
    return "?";
}

inline RiskEstimator risk_estimator_from_string(const std::string& s) {
    if (s == "sve") return RiskEstimator::Sve;
    if (s == "sve-wo") return RiskEstimator::SveWo;
    if (s == "snr") return RiskEstimator::Snr;
    if (s == "snr-mse") return RiskEstimator::SnrMse;
    throw std::invalid_argument("unknown risk estimator: " + s);
}

struct RankedPattern {
    int pattern_id = 0;  // index in the candidate list
    CanonicalPattern pattern;
    double risk = 0.0;
    bool infinite = false;
    int rank = 0;
};

struct RankReport {
    RiskEstimator estimator = RiskEstimator::Sve;
    std::vector<RankedPattern> rows;  // ascending risk
};

// Scores every candidate with the chosen estimator and sorts ascending.
// Histogram estimators need hist, scene estimators need scene. Infinite risks
// are capped to the largest finite double and flagged so ordering stays total;
// exact ties order by the canonical pattern's lexicographic layout.
inline RankReport rank_patterns(RiskEstimator estimator, const RadianceHistogram* hist,
                                const RadianceMap* scene,
                                const std::vector<CanonicalPattern>& candidates,
                                const SensorConfig& cfg, const NeighborCountTable& table) {
    const bool needs_hist = estimator == RiskEstimator::Sve || estimator == RiskEstimator::SveWo;
    if (needs_hist && hist == nullptr)
        throw std::invalid_argument("rank_patterns: estimator requires a histogram");
    if (!needs_hist && scene == nullptr)
        throw std::invalid_argument("rank_patterns: estimator requires a radiance map");
    if (candidates.empty()) throw std::invalid_argument("rank_patterns: no candidates");

    RankReport report;
    report.estimator = estimator;
    report.rows.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        RiskValue rv;
        switch (estimator) {
            case RiskEstimator::Sve: rv = sve_risk_hist(*hist, candidates[i].pattern, cfg, table); break;
            case RiskEstimator::SveWo: rv = sve_risk_wo(*hist, candidates[i].pattern, cfg, table); break;
            case RiskEstimator::Snr: rv = snr_risk(*scene, candidates[i].pattern, cfg); break;
            case RiskEstimator::SnrMse: rv = snr_mse_risk(*scene, candidates[i].pattern, cfg); break;
        }
        RankedPattern row;
        row.pattern_id = static_cast<int>(i);
        row.pattern = candidates[i];
        row.infinite = rv.infinite();
        row.risk = row.infinite ? std::numeric_limits<double>::max() : rv.total();
        report.rows.push_back(row);
    }
    std::sort(report.rows.begin(), report.rows.end(),
              [](const RankedPattern& a, const RankedPattern& b) {
                  if (a.risk != b.risk) return a.risk < b.risk;
                  return pattern_less(a.pattern.pattern, b.pattern.pattern);
              });
    for (std::size_t i = 0; i < report.rows.size(); ++i)
        report.rows[i].rank = static_cast<int>(i) + 1;
    return report;
}

}  // namespace sve

#endif
