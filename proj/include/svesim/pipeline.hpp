#ifndef SVESIM_PIPELINE_HPP
#define SVESIM_PIPELINE_HPP

#include <atomic>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "svesim/histogram.hpp"
#include "svesim/image.hpp"
#include "svesim/metrics.hpp"
#include "svesim/patterns.hpp"
#include "svesim/reconstruct.hpp"
#include "svesim/risk.hpp"
#include "svesim/scenes.hpp"
#include "svesim/sensor.hpp"

namespace sve {

struct ResourceLimitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Index-parallel loop. Worker count 0 picks the hardware concurrency; results
// must be written to per-index slots so the outcome is identical for any
// worker count.
template <typename Fn>
inline void parallel_for(std::size_t n, int workers, Fn&& fn) {
    if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    if (workers == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            fn(i);
        }
    };
    std::vector<std::thread> threads;
    const int count = static_cast<int>(std::min<std::size_t>(workers, n));
    threads.reserve(count);
    for (int t = 0; t < count; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
}

struct EvalOptions {
    std::vector<RiskEstimator> estimators{RiskEstimator::Sve, RiskEstimator::SveWo,
                                          RiskEstimator::Snr, RiskEstimator::SnrMse};
    bool run_lpa = true;
    bool run_admm = true;
    int bins = 512;
    int pilot_downsample = 4;
    int window = 3;
    double admm_lambda = 1.0;
    int admm_iters = 30;
    int workers = 1;
    std::uint64_t seed = 1;
    long long max_pixels = 512 * 512;  // refuse larger scenes unless allowed
    bool allow_large = false;
};

namespace detail {

inline void guard_scene(const RadianceMap& scene, const EvalOptions& opt) {
    scene.require_valid();
    scene.require_even_dims();
    if (!opt.allow_large &&
        static_cast<long long>(scene.size()) > opt.max_pixels)
        throw ResourceLimitError("scene exceeds the pixel budget; pass allow_large to override");
}

inline RadianceMap pilot_scene(const RadianceMap& scene, int factor) {
    if (factor <= 1) return scene;
    if (scene.width % factor != 0 || scene.height % factor != 0 ||
        (scene.width / factor) % 2 != 0 || (scene.height / factor) % 2 != 0)
        throw std::invalid_argument(
            "pilot downsample factor must divide both dimensions and leave them even");
    return downsample_box(scene, factor);
}

}  // namespace detail

// Pilot stage: capture the probe pattern on a (optionally downsampled) scene
// and distill the radiance histogram.
inline RadianceHistogram pilot_histogram(const RadianceMap& scene, const SensorConfig& cfg,
                                         const LevelSet& levels, std::uint64_t seed,
                                         int bins = 512, int downsample = 4) {
    const RadianceMap small = detail::pilot_scene(scene, downsample);
    const CanonicalPattern probe = pilot_pattern(levels);
    const RawCapture cap = simulate_capture(small, probe.pattern, cfg, seed, true);
    return build_histogram(cap, bins);
}

struct ReconstructionScores {
    double mu_psnr = 0.0;
    double mu_ssim = 0.0;
};

inline ReconstructionScores score_reconstruction(const RadianceMap& recon,
                                                 const RadianceMap& truth_unit,
                                                 double reference, double mu) {
    const RadianceMap recon_unit = normalize_unit(recon, reference);
    ReconstructionScores s;
    s.mu_psnr = mu_psnr(recon_unit, truth_unit, mu);
    s.mu_ssim = mu_ssim(recon_unit, truth_unit, mu);
    return s;
}

struct SceneEvalResult {
    std::string name;
    ScoreTable scores;                    // [candidate][algorithm][metric]
    std::vector<RankReport> ranks;        // parallel to EvalOptions::estimators
    std::vector<SpearmanResult> spearman; // per metric, LPA vs ADMM-TV ranking agreement
    RadianceHistogram pilot;
};

struct EvalAggregate {
    RiskEstimator estimator;
    std::string algorithm;
    std::string metric;
    double delta1 = 0.0;
    double delta5 = 0.0;
    double q1 = 0.0;
    double q5 = 0.0;
    std::vector<double> per_scene_delta1;
};

struct EvalResult {
    std::vector<CanonicalPattern> candidates;
    std::vector<SceneEvalResult> scenes;
    std::vector<EvalAggregate> aggregates;
    std::vector<std::string> algorithms;
    std::vector<std::string> metrics;
};

// Full ranking-vs-quality study: for every scene, estimate risks of all
// pattern classes, capture and reconstruct each class with the same scene
// seed (matched noise for fair cross-pattern comparison), score against the
// ground truth, and aggregate the rank deltas. Deterministic for a fixed
// master seed, regardless of worker count.
inline EvalResult run_rank_eval(const std::vector<RadianceMap>& scenes,
                                const std::vector<std::string>& names, const SensorConfig& cfg,
                                const LevelSet& levels, const EvalOptions& opt) {
    if (scenes.empty()) throw std::invalid_argument("run_rank_eval: no scenes");
    if (scenes.size() != names.size())
        throw std::invalid_argument("run_rank_eval: scene/name count mismatch");
    if (!opt.run_lpa && !opt.run_admm)
        throw std::invalid_argument("run_rank_eval: need at least one reconstructor");
    cfg.require_valid();

    EvalResult result;
    result.candidates = enumerate_classes(levels);
    if (opt.run_lpa) result.algorithms.push_back("lpa");
    if (opt.run_admm) result.algorithms.push_back("admm-tv");
    result.metrics = {"mu_psnr", "mu_ssim"};
    const NeighborCountTable table = build_neighbor_table(opt.window);
    const double mu = cfg.v_max;

    for (std::size_t n = 0; n < scenes.size(); ++n) {
        detail::guard_scene(scenes[n], opt);
        const std::uint64_t scene_seed = mix_seed(opt.seed, 2 * n);
        const std::uint64_t pilot_seed = mix_seed(opt.seed, 2 * n + 1);

        SceneEvalResult se;
        se.name = names[n];
        se.pilot = pilot_histogram(scenes[n], cfg, levels, pilot_seed, opt.bins,
                                   opt.pilot_downsample);
        for (RiskEstimator e : opt.estimators)
            se.ranks.push_back(
                rank_patterns(e, &se.pilot, &scenes[n], result.candidates, cfg, table));

        se.scores.pattern_ids.resize(result.candidates.size());
        for (std::size_t i = 0; i < result.candidates.size(); ++i)
            se.scores.pattern_ids[i] = static_cast<int>(i);
        se.scores.algorithms = result.algorithms;
        se.scores.metrics = result.metrics;
        se.scores.resize();

        const double reference = percentile(scenes[n].values, 99.9);
        const RadianceMap truth_unit =
            normalize_unit(scenes[n], reference > 0.0 ? reference : 1.0);

        parallel_for(result.candidates.size(), opt.workers, [&](std::size_t i) {
            const RawCapture cap = simulate_capture(
                scenes[n], result.candidates[i].pattern, cfg, scene_seed, true);
            RadianceMap lpa;
            if (opt.run_lpa || opt.run_admm) lpa = lpa_reconstruct(cap);
            std::size_t j = 0;
            if (opt.run_lpa) {
                const auto s = score_reconstruction(lpa, truth_unit, reference, mu);
                se.scores.at(i, j, 0) = s.mu_psnr;
                se.scores.at(i, j, 1) = s.mu_ssim;
                ++j;
            }
            if (opt.run_admm) {
                const RadianceMap admm =
                    admm_tv_reconstruct(cap, opt.admm_lambda, opt.admm_iters, nullptr, &lpa);
                const auto s = score_reconstruction(admm, truth_unit, reference, mu);
                se.scores.at(i, j, 0) = s.mu_psnr;
                se.scores.at(i, j, 1) = s.mu_ssim;
            }
        });

        if (opt.run_lpa && opt.run_admm) {
            for (std::size_t k = 0; k < result.metrics.size(); ++k) {
                std::vector<double> a(result.candidates.size()), b(result.candidates.size());
                for (std::size_t i = 0; i < result.candidates.size(); ++i) {
                    a[i] = se.scores.at(i, 0, k);
                    b[i] = se.scores.at(i, 1, k);
                }
                se.spearman.push_back(spearman_rho(a, b));
            }
        }
        result.scenes.push_back(std::move(se));
    }

    // Rank-ordered score lists per estimator/algorithm/metric, aggregated over scenes.
    for (std::size_t e = 0; e < opt.estimators.size(); ++e) {
        for (std::size_t j = 0; j < result.algorithms.size(); ++j) {
            for (std::size_t k = 0; k < result.metrics.size(); ++k) {
                EvalAggregate agg;
                agg.estimator = opt.estimators[e];
                agg.algorithm = result.algorithms[j];
                agg.metric = result.metrics[k];
                std::vector<double> oracle(scenes.size());
                std::vector<double> top1(scenes.size());
                std::vector<std::vector<double>> ranked(scenes.size());
                for (std::size_t n = 0; n < scenes.size(); ++n) {
                    const SceneEvalResult& se = result.scenes[n];
                    oracle[n] = se.scores.at(oracle_pattern(se.scores, j, k), j, k);
                    ranked[n].resize(result.candidates.size());
                    for (std::size_t i = 0; i < result.candidates.size(); ++i)
                        ranked[n][i] = se.scores.at(se.ranks[e].rows[i].pattern_id, j, k);
                    top1[n] = ranked[n][0];
                    agg.per_scene_delta1.push_back(oracle[n] - top1[n]);
                }
                agg.delta1 = top_k_delta(oracle, ranked, 1);
                agg.delta5 = top_k_delta(oracle, ranked, std::min<int>(5, ranked[0].size()));
                agg.q1 = q_score(oracle, top1, 0.01);
                agg.q5 = q_score(oracle, top1, 0.05);
                result.aggregates.push_back(std::move(agg));
            }
        }
    }
    return result;
}

struct PipelineResult {
    RankReport rank;
    CanonicalPattern chosen;
    RadianceHistogram pilot;
    RawCapture capture;
    RadianceMap reconstruction;
    ReconstructionScores scores;
    int admm_iterations = 0;
};

// One end-to-end run: pilot, risk ranking, capture of the winning pattern,
// reconstruction, and scoring against the ground truth scene.
inline PipelineResult run_pipeline(const RadianceMap& scene, const SensorConfig& cfg,
                                   const LevelSet& levels, RiskEstimator estimator,
                                   const std::string& reconstructor, const EvalOptions& opt) {
    detail::guard_scene(scene, opt);
    cfg.require_valid();

    PipelineResult out;
    const NeighborCountTable table = build_neighbor_table(opt.window);
    const std::vector<CanonicalPattern> candidates = enumerate_classes(levels);
    out.pilot = pilot_histogram(scene, cfg, levels, mix_seed(opt.seed, 1), opt.bins,
                                opt.pilot_downsample);
    out.rank = rank_patterns(estimator, &out.pilot, &scene, candidates, cfg, table);
    out.chosen = out.rank.rows[0].pattern;
    out.capture = simulate_capture(scene, out.chosen.pattern, cfg, mix_seed(opt.seed, 2), true);

    AdmmStats stats;
    if (reconstructor == "lpa") {
        out.reconstruction = lpa_reconstruct(out.capture);
    } else if (reconstructor == "admm-tv") {
        out.reconstruction =
            admm_tv_reconstruct(out.capture, opt.admm_lambda, opt.admm_iters, &stats);
        out.admm_iterations = stats.iterations;
    } else {
        throw std::invalid_argument("unknown reconstructor: " + reconstructor);
    }
    const double reference = percentile(scene.values, 99.9);
    const RadianceMap truth_unit = normalize_unit(scene, reference > 0.0 ? reference : 1.0);
    out.scores = score_reconstruction(out.reconstruction, truth_unit,
                                      reference > 0.0 ? reference : 1.0, cfg.v_max);
    return out;
}

struct BenchRow {
    std::string estimator;
    int width = 0;
    int height = 0;
    long long pixels = 0;
    int executions = 0;
    double mean_seconds = 0.0;
    double std_seconds = 0.0;
};

// Risk-evaluation timing at several resolutions. The histogram route times
// histogram construction plus the per-pattern integral (pilot capture is
// prepared outside the clock); the per-pixel route times the full sweep over
// the scene for every pattern.
inline std::vector<BenchRow> run_bench(const SensorConfig& cfg, const LevelSet& levels,
                                       const std::vector<std::pair<int, int>>& resolutions,
                                       int executions, std::uint64_t seed, int bins = 512,
                                       int window = 3) {
    if (executions < 2) throw std::invalid_argument("run_bench: need at least two executions");
    cfg.require_valid();
    const std::vector<CanonicalPattern> candidates = enumerate_classes(levels);
    const NeighborCountTable table = build_neighbor_table(window);
    std::vector<BenchRow> rows;

    auto summarize = [&](const std::string& name, int w, int h,
                         const std::vector<double>& times) {
        BenchRow row;
        row.estimator = name;
        row.width = w;
        row.height = h;
        row.pixels = static_cast<long long>(w) * h;
        row.executions = executions;
        double mean = 0.0;
        for (double t : times) mean += t;
        mean /= times.size();
        double var = 0.0;
        for (double t : times) var += (t - mean) * (t - mean);
        row.mean_seconds = mean;
        row.std_seconds = std::sqrt(var / (times.size() - 1));
        rows.push_back(row);
    };

    for (const auto& [w, h] : resolutions) {
        SceneParams params;
        params.seed = mix_seed(seed, static_cast<std::uint64_t>(w) * 31 + h);
        const RadianceMap scene = synth_scene(SceneKind::HdrComposite, w, h, params);
        const CanonicalPattern probe = pilot_pattern(levels);
        const RawCapture pilot_cap =
            simulate_capture(scene, probe.pattern, cfg, mix_seed(seed, 7), true);

        using clock = std::chrono::steady_clock;
        std::vector<double> sve_times(executions), snr_times(executions);
        volatile double sink = 0.0;
        for (int x = 0; x < executions; ++x) {
            const auto t0 = clock::now();
            const RadianceHistogram hist = build_histogram(pilot_cap, bins);
            double acc = 0.0;
            for (const CanonicalPattern& cand : candidates)
                acc += sve_risk_hist(hist, cand.pattern, cfg, table).total();
            sink = sink + acc;
            sve_times[x] = std::chrono::duration<double>(clock::now() - t0).count();
        }
        for (int x = 0; x < executions; ++x) {
            const auto t0 = clock::now();
            double acc = 0.0;
            for (const CanonicalPattern& cand : candidates)
                acc += snr_risk(scene, cand.pattern, cfg).total();
            sink = sink + acc;
            snr_times[x] = std::chrono::duration<double>(clock::now() - t0).count();
        }
        summarize("sve", w, h, sve_times);
        summarize("snr", w, h, snr_times);
    }
    return rows;
}

}  // namespace sve

#endif
