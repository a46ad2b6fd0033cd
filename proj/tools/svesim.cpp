// Command line front end: scene synthesis, capture simulation, histogram
// pilot, risk ranking, reconstruction, evaluation, and timing.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "svesim/io.hpp"
#include "svesim/pipeline.hpp"
#include "svesim/scenes.hpp"

namespace fs = std::filesystem;
using namespace sve;

namespace {

constexpr int kExitParse = 2;
constexpr int kExitIo = 3;
constexpr int kExitPrecondition = 4;
constexpr int kExitResource = 5;

SensorConfig load_config(const std::string& path) {
    if (path.empty()) return SensorConfig{};
    SensorConfig cfg = load_json(path).get<SensorConfig>();
    return cfg;
}

LevelSet load_levels(const std::string& path) {
    if (path.empty()) return LevelSet::default_nine();
    return load_json(path).get<LevelSet>();
}

std::vector<RiskEstimator> parse_estimators(const std::string& csv) {
    std::vector<RiskEstimator> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(risk_estimator_from_string(tok));
    }
    if (out.empty()) throw std::invalid_argument("no estimators given");
    return out;
}

std::vector<std::pair<int, int>> parse_resolutions(const std::string& csv) {
    std::vector<std::pair<int, int>> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const auto x = tok.find('x');
        if (x == std::string::npos)
            throw std::invalid_argument("resolution must look like 128x128: " + tok);
        out.emplace_back(std::stoi(tok.substr(0, x)), std::stoi(tok.substr(x + 1)));
    }
    if (out.empty()) throw std::invalid_argument("no resolutions given");
    return out;
}

json manifest_json(const std::string& command, const std::vector<std::string>& scenes,
                   const std::string& config_path, const std::string& levels_path,
                   std::uint64_t seed, const json& extra) {
    json j{{"command", command},
           {"scenes", scenes},
           {"config", config_path},
           {"levels", levels_path},
           {"seed", seed}};
    j.update(extra);
    return j;
}

struct SynthArgs {
    std::string kind = "hdr-composite";
    int width = 128, height = 128;
    SceneParams params;
    std::string out;
    std::string preview;
};

int cmd_synth(const SynthArgs& a) {
    const RadianceMap scene = synth_scene(scene_kind_from_string(a.kind), a.width, a.height, a.params);
    write_pfm(a.out, scene);
    save_json(a.out + ".json", json{{"kind", a.kind},
                                    {"width", a.width},
                                    {"height", a.height},
                                    {"level", a.params.level},
                                    {"level_a", a.params.level_a},
                                    {"level_b", a.params.level_b},
                                    {"split", a.params.split},
                                    {"lo", a.params.lo},
                                    {"hi", a.params.hi},
                                    {"seed", a.params.seed},
                                    {"p99_target", a.params.p99_target}});
    if (!a.preview.empty()) write_preview_png(a.preview, scene, SensorConfig{}.v_max);
    std::printf("wrote %s (%dx%d)\n", a.out.c_str(), a.width, a.height);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"2x2 exposure/gain pattern simulation, ranking, and reconstruction"};
    app.require_subcommand(1);

    // ---- synth
    SynthArgs synth;
    auto* s_synth = app.add_subcommand("synth", "generate a synthetic radiance scene (PFM)");
    s_synth->add_option("--kind", synth.kind, "flat | two-level | ramp | hdr-composite");
    s_synth->add_option("--width", synth.width);
    s_synth->add_option("--height", synth.height);
    s_synth->add_option("--level", synth.params.level, "flat level");
    s_synth->add_option("--level-a", synth.params.level_a, "two-level left value");
    s_synth->add_option("--level-b", synth.params.level_b, "two-level right value");
    s_synth->add_option("--split", synth.params.split, "two-level split fraction");
    s_synth->add_option("--lo", synth.params.lo, "ramp start");
    s_synth->add_option("--hi", synth.params.hi, "ramp end");
    s_synth->add_option("--seed", synth.params.seed, "hdr-composite seed");
    s_synth->add_option("--p99-target", synth.params.p99_target,
                        "hdr-composite 99th percentile radiance");
    s_synth->add_option("--out", synth.out, "output PFM path")->required();
    s_synth->add_option("--preview", synth.preview, "optional tone-mapped PNG");

    // ---- capture
    struct {
        std::string scene, config, pattern, out;
        std::uint64_t seed = 1;
        bool no_noise = false;
    } cap;
    auto* s_cap = app.add_subcommand("capture", "simulate one capture of a scene");
    s_cap->add_option("--scene", cap.scene)->required();
    s_cap->add_option("--config", cap.config, "sensor config JSON (defaults built in)");
    s_cap->add_option("--pattern", cap.pattern, "pattern JSON")->required();
    s_cap->add_option("--seed", cap.seed);
    s_cap->add_flag("--no-noise", cap.no_noise, "disable shot and read noise");
    s_cap->add_option("--out", cap.out, "output capture JSON")->required();

    // ---- pilot
    struct {
        std::string scene, config, levels, out;
        std::uint64_t seed = 1;
        int bins = 512, downsample = 4;
    } pil;
    auto* s_pil = app.add_subcommand("pilot", "estimate the radiance histogram with a probe capture");
    s_pil->add_option("--scene", pil.scene)->required();
    s_pil->add_option("--config", pil.config);
    s_pil->add_option("--levels", pil.levels);
    s_pil->add_option("--seed", pil.seed);
    s_pil->add_option("--bins", pil.bins);
    s_pil->add_option("--downsample", pil.downsample, "pilot downsample factor per axis");
    s_pil->add_option("--out", pil.out, "output histogram JSON")->required();

    // ---- rank
    struct {
        std::string estimator = "sve";
        std::string hist, scene, config, levels, out, out_json;
        int window = 3, top = 0;
    } rk;
    auto* s_rank = app.add_subcommand("rank", "score and sort all pattern classes by risk");
    s_rank->add_option("--estimator", rk.estimator, "sve | sve-wo | snr | snr-mse");
    s_rank->add_option("--hist", rk.hist, "histogram JSON (sve, sve-wo)");
    s_rank->add_option("--scene", rk.scene, "scene PFM (snr, snr-mse)");
    s_rank->add_option("--config", rk.config);
    s_rank->add_option("--levels", rk.levels);
    s_rank->add_option("--window", rk.window, "neighborhood window (odd)");
    s_rank->add_option("--top", rk.top, "print the best N rows");
    s_rank->add_option("--out", rk.out, "output CSV")->required();
    s_rank->add_option("--out-json", rk.out_json, "optional JSON copy");

    // ---- reconstruct
    struct {
        std::string capture, algo = "lpa", out, preview;
        double lambda = 1.0;
        int max_iters = 30;
    } rc;
    auto* s_rc = app.add_subcommand("reconstruct", "reconstruct radiance from a capture");
    s_rc->add_option("--capture", rc.capture)->required();
    s_rc->add_option("--algo", rc.algo, "lpa | admm-tv");
    s_rc->add_option("--lambda", rc.lambda, "TV weight (admm-tv)");
    s_rc->add_option("--max-iters", rc.max_iters, "ADMM iteration cap");
    s_rc->add_option("--out", rc.out, "output PFM")->required();
    s_rc->add_option("--preview", rc.preview, "optional tone-mapped PNG");

    // ---- eval
    struct {
        std::vector<std::string> scenes;
        std::string config, levels, out_dir;
        std::string estimators = "sve,sve-wo,snr,snr-mse";
        std::string reconstructors = "lpa,admm-tv";
        std::uint64_t seed = 1;
        int bins = 512, downsample = 4, window = 3, workers = 1;
        bool allow_large = false;
    } ev;
    auto* s_ev = app.add_subcommand("eval", "rank all classes and sweep reconstructions per scene");
    s_ev->add_option("--scene", ev.scenes, "scene PFM (repeatable)")->required();
    s_ev->add_option("--config", ev.config);
    s_ev->add_option("--levels", ev.levels);
    s_ev->add_option("--estimators", ev.estimators, "comma list");
    s_ev->add_option("--reconstructors", ev.reconstructors, "comma list of lpa, admm-tv");
    s_ev->add_option("--seed", ev.seed);
    s_ev->add_option("--bins", ev.bins);
    s_ev->add_option("--downsample", ev.downsample);
    s_ev->add_option("--window", ev.window);
    s_ev->add_option("--workers", ev.workers, "pattern-level worker threads (0 = auto)");
    s_ev->add_flag("--allow-large", ev.allow_large, "lift the scene size guard");
    s_ev->add_option("--out-dir", ev.out_dir)->required();

    // ---- bench
    struct {
        std::string config, levels, out;
        std::string resolutions = "128x128,256x256";
        int executions = 100, bins = 512;
        std::uint64_t seed = 1;
    } bn;
    auto* s_bn = app.add_subcommand("bench", "time risk evaluation of all classes");
    s_bn->add_option("--config", bn.config);
    s_bn->add_option("--levels", bn.levels);
    s_bn->add_option("--resolutions", bn.resolutions, "comma list like 128x128,256x256");
    s_bn->add_option("--executions", bn.executions);
    s_bn->add_option("--bins", bn.bins);
    s_bn->add_option("--seed", bn.seed);
    s_bn->add_option("--out", bn.out, "output CSV")->required();

    // ---- pipeline
    struct {
        std::string scene, config, levels, out_dir;
        std::string estimator = "sve";
        std::string reconstructor = "lpa";
        std::uint64_t seed = 1;
        int bins = 512, downsample = 4, window = 3;
        bool allow_large = false;
    } pl;
    auto* s_pl = app.add_subcommand("pipeline", "pilot, rank, capture best pattern, reconstruct");
    s_pl->add_option("--scene", pl.scene)->required();
    s_pl->add_option("--config", pl.config);
    s_pl->add_option("--levels", pl.levels);
    s_pl->add_option("--estimator", pl.estimator);
    s_pl->add_option("--reconstructor", pl.reconstructor, "lpa | admm-tv");
    s_pl->add_option("--seed", pl.seed);
    s_pl->add_option("--bins", pl.bins);
    s_pl->add_option("--downsample", pl.downsample);
    s_pl->add_option("--window", pl.window);
    s_pl->add_flag("--allow-large", pl.allow_large);
    s_pl->add_option("--out-dir", pl.out_dir)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitParse;
    }

    try {
        if (s_synth->parsed()) return cmd_synth(synth);

        if (s_cap->parsed()) {
            const RadianceMap scene = read_pfm(cap.scene);
            const SensorConfig cfg = load_config(cap.config);
            const Pattern pattern = load_json(cap.pattern).get<Pattern>();
            const RawCapture capture =
                simulate_capture(scene, pattern, cfg, cap.seed, !cap.no_noise);
            save_json(cap.out, json(capture));
            std::printf("wrote %s\n", cap.out.c_str());
            return 0;
        }

        if (s_pil->parsed()) {
            const RadianceMap scene = read_pfm(pil.scene);
            const SensorConfig cfg = load_config(pil.config);
            const LevelSet levels = load_levels(pil.levels);
            const RadianceHistogram hist =
                pilot_histogram(scene, cfg, levels, pil.seed, pil.bins, pil.downsample);
            if (hist.all_saturated())
                std::fprintf(stderr, "warning: pilot capture is entirely saturated\n");
            save_json(pil.out, json(hist));
            std::printf("wrote %s (saturated fraction %.4f)\n", pil.out.c_str(),
                        hist.saturated_fraction);
            return 0;
        }

        if (s_rank->parsed()) {
            const SensorConfig cfg = load_config(rk.config);
            const LevelSet levels = load_levels(rk.levels);
            const RiskEstimator est = risk_estimator_from_string(rk.estimator);
            RadianceHistogram hist;
            RadianceMap scene;
            const RadianceHistogram* hist_p = nullptr;
            const RadianceMap* scene_p = nullptr;
            if (est == RiskEstimator::Sve || est == RiskEstimator::SveWo) {
                if (rk.hist.empty()) throw std::invalid_argument("--hist required for " + rk.estimator);
                hist = load_json(rk.hist).get<RadianceHistogram>();
                hist_p = &hist;
            } else {
                if (rk.scene.empty()) throw std::invalid_argument("--scene required for " + rk.estimator);
                scene = read_pfm(rk.scene);
                scene_p = &scene;
            }
            const auto candidates = enumerate_classes(levels);
            const RankReport report = rank_patterns(est, hist_p, scene_p, candidates, cfg,
                                                    build_neighbor_table(rk.window));
            write_rank_csv(rk.out, report);
            if (!rk.out_json.empty()) {
                json rows = json::array();
                for (const auto& r : report.rows)
                    rows.push_back({{"rank", r.rank},
                                    {"pattern_id", r.pattern_id},
                                    {"pattern", r.pattern.pattern},
                                    {"risk", r.risk},
                                    {"infinite", r.infinite}});
                save_json(rk.out_json, rows);
            }
            for (int i = 0; i < rk.top && i < static_cast<int>(report.rows.size()); ++i) {
                const auto& r = report.rows[i];
                std::printf("#%d id=%d risk=%.6g tau=[%g %g %g %g] alpha=[%g %g %g %g]\n",
                            r.rank, r.pattern_id, r.risk, r.pattern.pattern.tau[0],
                            r.pattern.pattern.tau[1], r.pattern.pattern.tau[2],
                            r.pattern.pattern.tau[3], r.pattern.pattern.alpha[0],
                            r.pattern.pattern.alpha[1], r.pattern.pattern.alpha[2],
                            r.pattern.pattern.alpha[3]);
            }
            std::printf("wrote %s (%zu rows)\n", rk.out.c_str(), report.rows.size());
            return 0;
        }

        if (s_rc->parsed()) {
            const RawCapture capture = load_json(rc.capture).get<RawCapture>();
            RadianceMap recon;
            if (rc.algo == "lpa") {
                recon = lpa_reconstruct(capture);
            } else if (rc.algo == "admm-tv") {
                AdmmStats stats;
                recon = admm_tv_reconstruct(capture, rc.lambda, rc.max_iters, &stats);
                std::printf("admm-tv converged in %d iterations\n", stats.iterations);
            } else {
                throw std::invalid_argument("unknown reconstructor: " + rc.algo);
            }
            write_pfm(rc.out, recon);
            if (!rc.preview.empty())
                write_preview_png(rc.preview, recon, capture.config.v_max);
            std::printf("wrote %s\n", rc.out.c_str());
            return 0;
        }

        if (s_ev->parsed()) {
            const SensorConfig cfg = load_config(ev.config);
            const LevelSet levels = load_levels(ev.levels);
            EvalOptions opt;
            opt.estimators = parse_estimators(ev.estimators);
            opt.run_lpa = ev.reconstructors.find("lpa") != std::string::npos;
            opt.run_admm = ev.reconstructors.find("admm-tv") != std::string::npos;
            opt.bins = ev.bins;
            opt.pilot_downsample = ev.downsample;
            opt.window = ev.window;
            opt.workers = ev.workers;
            opt.seed = ev.seed;
            opt.allow_large = ev.allow_large;

            std::vector<RadianceMap> scenes;
            std::vector<std::string> names;
            for (const std::string& path : ev.scenes) {
                scenes.push_back(read_pfm(path));
                names.push_back(fs::path(path).stem().string());
            }
            const EvalResult result = run_rank_eval(scenes, names, cfg, levels, opt);

            fs::create_directories(ev.out_dir);
            const fs::path dir(ev.out_dir);
            for (std::size_t n = 0; n < result.scenes.size(); ++n) {
                const auto& se = result.scenes[n];
                write_score_csv((dir / (se.name + "_scores.csv")).string(), se.name, se.scores);
                for (std::size_t e = 0; e < opt.estimators.size(); ++e)
                    write_rank_csv((dir / (se.name + "_rank_" +
                                           risk_estimator_name(opt.estimators[e]) + ".csv"))
                                       .string(),
                                   se.ranks[e]);
                if (se.scores.algorithms.size() == 2) {
                    for (std::size_t k = 0; k < se.scores.metrics.size(); ++k) {
                        std::ofstream f(dir / (se.name + "_scatter_" + se.scores.metrics[k] + ".csv"));
                        f << "pattern_id," << se.scores.algorithms[0] << ","
                          << se.scores.algorithms[1] << "\n";
                        for (std::size_t i = 0; i < se.scores.pattern_ids.size(); ++i)
                            f << se.scores.pattern_ids[i] << "," << se.scores.at(i, 0, k) << ","
                              << se.scores.at(i, 1, k) << "\n";
                    }
                }
            }
            json stats = json::array();
            for (const auto& agg : result.aggregates)
                stats.push_back({{"estimator", risk_estimator_name(agg.estimator)},
                                 {"algorithm", agg.algorithm},
                                 {"metric", agg.metric},
                                 {"delta1", agg.delta1},
                                 {"delta5", agg.delta5},
                                 {"q1", agg.q1},
                                 {"q5", agg.q5},
                                 {"per_scene_delta1", agg.per_scene_delta1}});
            json spearman = json::array();
            for (std::size_t n = 0; n < result.scenes.size(); ++n)
                for (std::size_t k = 0; k < result.scenes[n].spearman.size(); ++k)
                    spearman.push_back({{"scene", result.scenes[n].name},
                                        {"metric", result.metrics[k]},
                                        {"rho", result.scenes[n].spearman[k].rho},
                                        {"p_value", result.scenes[n].spearman[k].p_value},
                                        {"defined", result.scenes[n].spearman[k].defined}});
            save_json((dir / "stats.json").string(),
                      json{{"seed", ev.seed}, {"aggregates", stats}, {"spearman", spearman}});
            save_json((dir / "manifest.json").string(),
                      manifest_json("eval", ev.scenes, ev.config, ev.levels, ev.seed,
                                    json{{"estimators", ev.estimators},
                                         {"reconstructors", ev.reconstructors},
                                         {"bins", ev.bins},
                                         {"downsample", ev.downsample},
                                         {"window", ev.window},
                                         {"out_dir", ev.out_dir}}));
            std::printf("wrote %s\n", (dir / "stats.json").string().c_str());
            return 0;
        }

        if (s_bn->parsed()) {
            const SensorConfig cfg = load_config(bn.config);
            const LevelSet levels = load_levels(bn.levels);
            const auto rows = run_bench(cfg, levels, parse_resolutions(bn.resolutions),
                                        bn.executions, bn.seed, bn.bins);
            std::ofstream f(bn.out);
            if (!f) throw IoError("cannot open for writing: " + bn.out);
            f << "estimator,width,height,pixels,executions,mean_seconds,std_seconds\n";
            for (const auto& r : rows) {
                f << r.estimator << "," << r.width << "," << r.height << "," << r.pixels << ","
                  << r.executions << "," << r.mean_seconds << "," << r.std_seconds << "\n";
                std::printf("%s %dx%d mean %.6f s (std %.6f)\n", r.estimator.c_str(), r.width,
                            r.height, r.mean_seconds, r.std_seconds);
            }
            return 0;
        }

        if (s_pl->parsed()) {
            const RadianceMap scene = read_pfm(pl.scene);
            const SensorConfig cfg = load_config(pl.config);
            const LevelSet levels = load_levels(pl.levels);
            EvalOptions opt;
            opt.bins = pl.bins;
            opt.pilot_downsample = pl.downsample;
            opt.window = pl.window;
            opt.seed = pl.seed;
            opt.allow_large = pl.allow_large;
            const PipelineResult result =
                run_pipeline(scene, cfg, levels, risk_estimator_from_string(pl.estimator),
                             pl.reconstructor, opt);

            fs::create_directories(pl.out_dir);
            const fs::path dir(pl.out_dir);
            save_json((dir / "hist.json").string(), json(result.pilot));
            write_rank_csv((dir / "rank.csv").string(), result.rank);
            save_json((dir / "capture.json").string(), json(result.capture));
            write_pfm((dir / "recon.pfm").string(), result.reconstruction);
            write_preview_png((dir / "recon.png").string(), result.reconstruction, cfg.v_max);
            save_json((dir / "metrics.json").string(),
                      json{{"seed", pl.seed},
                           {"mu_psnr", result.scores.mu_psnr},
                           {"mu_ssim", result.scores.mu_ssim},
                           {"chosen_pattern", result.chosen.pattern},
                           {"admm_iterations", result.admm_iterations}});
            save_json((dir / "manifest.json").string(),
                      manifest_json("pipeline", {pl.scene}, pl.config, pl.levels, pl.seed,
                                    json{{"estimator", pl.estimator},
                                         {"reconstructor", pl.reconstructor},
                                         {"bins", pl.bins},
                                         {"downsample", pl.downsample},
                                         {"window", pl.window},
                                         {"out_dir", pl.out_dir}}));
            std::printf("top-1 risk %.6g, %s mu-PSNR %.2f dB\n", result.rank.rows[0].risk,
                        pl.reconstructor.c_str(), result.scores.mu_psnr);
            return 0;
        }
    } catch (const ResourceLimitError& e) {
        std::fprintf(stderr, "resource limit: %s\n", e.what());
        return kExitResource;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kExitIo;
    } catch (const json::exception& e) {
        std::fprintf(stderr, "malformed input: %s\n", e.what());
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "invalid input: %s\n", e.what());
        return kExitPrecondition;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    std::fprintf(stderr, "no subcommand executed\n");
    return kExitParse;
}
