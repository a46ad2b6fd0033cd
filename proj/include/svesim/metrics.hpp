#ifndef SVESIM_METRICS_HPP
#define SVESIM_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "svesim/image.hpp"

namespace sve {

// Divide by a fixed reference level and clip into [0, 1]. Both images of a
// comparison must use the same reference (the scene's 99.9th percentile
// ground truth radiance in the evaluation pipeline).
inline RadianceMap normalize_unit(const RadianceMap& x, double reference) {
    if (!(reference > 0.0)) throw std::invalid_argument("normalize_unit: reference must be positive");
    RadianceMap out = x;
    for (double& v : out.values) v = std::clamp(v / reference, 0.0, 1.0);
    return out;
}

// Log compression log(1 + mu x) / log(1 + mu) of a unit-range image.
inline RadianceMap mu_tonemap(const RadianceMap& x, double mu) {
    if (!(mu > 0.0)) throw std::invalid_argument("mu_tonemap: mu must be positive");
    RadianceMap out = x;
    const double denom = std::log1p(mu);
    for (double& v : out.values) v = std::log1p(mu * std::clamp(v, 0.0, 1.0)) / denom;
    return out;
}

// PSNR of tone-mapped unit-range images, peak 1, capped at 99 dB.
inline double mu_psnr(const RadianceMap& a, const RadianceMap& b, double mu) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("mu_psnr: dimension mismatch");
    const RadianceMap ta = mu_tonemap(a, mu);
    const RadianceMap tb = mu_tonemap(b, mu);
    double mse = 0.0;
    for (std::size_t i = 0; i < ta.size(); ++i) {
        const double d = ta.values[i] - tb.values[i];
        mse += d * d;
    }
    mse /= static_cast<double>(ta.size());
    if (mse <= 0.0) return 99.0;
    return std::min(99.0, -10.0 * std::log10(mse));
}

namespace detail {

inline std::vector<double> gaussian_taps(int radius, double sigma) {
    std::vector<double> taps(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        taps[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += taps[i + radius];
    }
    for (double& t : taps) t /= sum;
    return taps;
}

// Separable filtering, output restricted later to the fully-covered interior.
inline std::vector<double> filter_separable(const std::vector<double>& img, int w, int h,
                                            const std::vector<double>& taps) {
    const int radius = static_cast<int>(taps.size()) / 2;
    std::vector<double> tmp(img.size(), 0.0), out(img.size(), 0.0);
    for (int r = 0; r < h; ++r)
        for (int c = radius; c < w - radius; ++c) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += taps[k + radius] * img[static_cast<std::size_t>(r) * w + c + k];
            tmp[static_cast<std::size_t>(r) * w + c] = acc;
        }
    for (int r = radius; r < h - radius; ++r)
        for (int c = 0; c < w; ++c) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += taps[k + radius] * tmp[static_cast<std::size_t>(r + k) * w + c];
            out[static_cast<std::size_t>(r) * w + c] = acc;
        }
    return out;
}

}  // namespace detail

// Mean structural similarity of the tone-mapped images: 11x11 Gaussian window
// (sigma 1.5), stability constants (0.01 L)^2 and (0.03 L)^2 with L = 1,
// averaged over the fully-covered interior.
inline double mu_ssim(const RadianceMap& a, const RadianceMap& b, double mu) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("mu_ssim: dimension mismatch");
    constexpr int kRadius = 5;
    if (a.width < 2 * kRadius + 1 || a.height < 2 * kRadius + 1)
        throw std::invalid_argument("mu_ssim: image smaller than the 11x11 window");
    const RadianceMap ta = mu_tonemap(a, mu);
    const RadianceMap tb = mu_tonemap(b, mu);
    const int w = a.width, h = a.height;
    const std::vector<double> taps = detail::gaussian_taps(kRadius, 1.5);

    std::vector<double> xx(ta.size()), yy(ta.size()), xy(ta.size());
    for (std::size_t i = 0; i < ta.size(); ++i) {
        xx[i] = ta.values[i] * ta.values[i];
        yy[i] = tb.values[i] * tb.values[i];
        xy[i] = ta.values[i] * tb.values[i];
    }
    const auto mu1 = detail::filter_separable(ta.values, w, h, taps);
    const auto mu2 = detail::filter_separable(tb.values, w, h, taps);
    const auto sxx = detail::filter_separable(xx, w, h, taps);
    const auto syy = detail::filter_separable(yy, w, h, taps);
    const auto sxy = detail::filter_separable(xy, w, h, taps);

    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double acc = 0.0;
    long long count = 0;
    for (int r = kRadius; r < h - kRadius; ++r) {
        for (int c = kRadius; c < w - kRadius; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * w + c;
            const double m1 = mu1[i], m2 = mu2[i];
            const double v1 = sxx[i] - m1 * m1;
            const double v2 = syy[i] - m2 * m2;
            const double cov = sxy[i] - m1 * m2;
            acc += ((2.0 * m1 * m2 + c1) * (2.0 * cov + c2)) /
                   ((m1 * m1 + m2 * m2 + c1) * (v1 + v2 + c2));
            ++count;
        }
    }
    return acc / static_cast<double>(count);
}

namespace detail {

inline std::vector<double> average_ranks(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

inline double beta_cont_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-14, kTiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

inline double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                      a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cont_fraction(a, b, x) / a;
    return 1.0 - front * beta_cont_fraction(b, a, 1.0 - x) / b;
}

}  // namespace detail

struct SpearmanResult {
    double rho = 0.0;
    double p_value = 1.0;
    bool defined = false;  // false when either input is constant or n < 3
};

// Spearman rank correlation with average ranks for ties; two-sided p-value
// from the t approximation t = rho sqrt((n-2)/(1-rho^2)) with n-2 degrees of
// freedom, evaluated through the regularized incomplete beta function.
inline SpearmanResult spearman_rho(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("spearman_rho: size mismatch");
    const std::size_t n = xs.size();
    SpearmanResult out;
    if (n < 3) return out;
    const auto rx = detail::average_ranks(xs);
    const auto ry = detail::average_ranks(ys);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = rx[i] - mx, dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return out;  // constant input, undefined
    out.defined = true;
    out.rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    const double df = static_cast<double>(n) - 2.0;
    const double r2 = out.rho * out.rho;
    if (r2 >= 1.0) {
        out.p_value = 0.0;
    } else {
        const double t2 = r2 * df / (1.0 - r2);
        out.p_value = detail::incomplete_beta(0.5 * df, 0.5, df / (df + t2));
    }
    return out;
}

// Mean shortfall of the K lowest-risk patterns against the per-scene oracle:
// (1/NK) sum_n sum_{i<K} (oracle_n - ranked_n[i]).
inline double top_k_delta(const std::vector<double>& oracle_scores,
                          const std::vector<std::vector<double>>& ranked_scores, int k) {
    if (oracle_scores.empty() || oracle_scores.size() != ranked_scores.size())
        throw std::invalid_argument("top_k_delta: scene count mismatch");
    if (k < 1) throw std::invalid_argument("top_k_delta: k must be >= 1");
    double acc = 0.0;
    for (std::size_t n = 0; n < oracle_scores.size(); ++n) {
        if (static_cast<std::size_t>(k) > ranked_scores[n].size())
            throw std::invalid_argument("top_k_delta: k exceeds the candidate count");
        for (int i = 0; i < k; ++i) acc += oracle_scores[n] - ranked_scores[n][i];
    }
    return acc / (static_cast<double>(oracle_scores.size()) * k);
}

// Fraction of scenes where the top-1 pattern falls more than eta (relative)
// short of the oracle score.
inline double q_score(const std::vector<double>& oracle_scores,
                      const std::vector<double>& top1_scores, double eta) {
    if (oracle_scores.empty() || oracle_scores.size() != top1_scores.size())
        throw std::invalid_argument("q_score: scene count mismatch");
    long long exceed = 0;
    for (std::size_t n = 0; n < oracle_scores.size(); ++n) {
        if (!(oracle_scores[n] > 0.0))
            throw std::invalid_argument("q_score: oracle scores must be positive");
        if ((oracle_scores[n] - top1_scores[n]) / oracle_scores[n] > eta) ++exceed;
    }
    return static_cast<double>(exceed) / static_cast<double>(oracle_scores.size());
}

// Quality scores of candidate patterns under several algorithms and metrics,
// indexed [pattern][algorithm][metric]. Pattern rows keep candidate order.
struct ScoreTable {
    std::vector<int> pattern_ids;
    std::vector<std::string> algorithms;
    std::vector<std::string> metrics;
    std::vector<double> scores;

    void resize() {
        scores.assign(pattern_ids.size() * algorithms.size() * metrics.size(), 0.0);
    }
    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
        return (i * algorithms.size() + j) * metrics.size() + k;
    }
    double& at(std::size_t i, std::size_t j, std::size_t k) { return scores[index(i, j, k)]; }
    double at(std::size_t i, std::size_t j, std::size_t k) const { return scores[index(i, j, k)]; }
};

// Row index of the best-scoring pattern for one algorithm/metric pair; ties
// resolve to the earliest row (lowest pattern id for id-ordered tables).
inline int oracle_pattern(const ScoreTable& table, std::size_t algorithm, std::size_t metric) {
    if (table.pattern_ids.empty()) throw std::invalid_argument("oracle_pattern: empty table");
    if (algorithm >= table.algorithms.size() || metric >= table.metrics.size())
        throw std::invalid_argument("oracle_pattern: index out of range");
    int best = 0;
    double best_score = table.at(0, algorithm, metric);
    for (std::size_t i = 1; i < table.pattern_ids.size(); ++i) {
        const double s = table.at(i, algorithm, metric);
        if (s > best_score) {
            best_score = s;
            best = static_cast<int>(i);
        }
    }
    return best;
}

}  // namespace sve

#endif
