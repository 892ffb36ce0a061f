// SPDX-License-Identifier: Apache-2.0
#include "commands.hpp"

#include "svg.hpp"

#include "rtad/checkpoint.hpp"
#include "rtad/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace rtad::app {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::ostream& say(const CommandContext& ctx) {
    static std::ostream discard(nullptr);
    return ctx.out ? *ctx.out : discard;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path);
    if (!os || !(os << text)) {
        throw ValidationError("cannot write " + path.string());
    }
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

const fs::path& require(const fs::path& p, const char* key) {
    if (p.empty()) {
        throw ConfigError(std::string(key) + " is not set");
    }
    return p;
}

MetricMatrix load_series(const RunConfig& cfg, const fs::path& data, const fs::path& labels,
                         const fs::path& interpretation) {
    MetricMatrix m = load_metric_matrix(data, parse_data_format(cfg.data_format));
    if (!labels.empty()) {
        attach_labels(m, load_labels(labels));
    }
    if (!interpretation.empty()) {
        attach_culprits(m, load_interpretation(interpretation));
    }
    return m;
}

// Called once inputs have loaded, so failed runs leave no directory behind.
fs::path start_run(const RunConfig& cfg, const CommandContext& ctx, const std::string& command) {
    fs::path dir = make_run_dir(ctx.output_root, command);
    write_text(dir / "config.txt", cfg.to_text());
    return dir;
}

/// Contiguous runs of 1 in `flags`, offset by `first`.
std::vector<std::pair<std::size_t, std::size_t>> runs_of_ones(const std::vector<int>& flags,
                                                              std::size_t first = 0) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t t = 0; t < flags.size();) {
        if (flags[t] != 1) {
            ++t;
            continue;
        }
        std::size_t e = t;
        while (e + 1 < flags.size() && flags[e + 1] == 1) {
            ++e;
        }
        out.emplace_back(first + t, first + e);
        t = e + 1;
    }
    return out;
}

std::vector<Band> label_bands(const std::vector<int>& labels) {
    std::vector<Band> out;
    for (auto [s, e] : runs_of_ones(labels)) {
        out.push_back({static_cast<double>(s), static_cast<double>(e)});
    }
    return out;
}

json eval_json(const EvalResult& e) {
    return {{"precision", e.precision}, {"recall", e.recall}, {"f1", e.f1},
            {"tp", e.tp},               {"fp", e.fp},         {"fn", e.fn}};
}

std::vector<std::string> names_of(const std::vector<std::size_t>& idx,
                                  const std::vector<std::string>& names) {
    std::vector<std::string> out;
    for (std::size_t i : idx) {
        out.push_back(i < names.size() ? names[i] : std::to_string(i));
    }
    return out;
}

Detector load_detector(const RunConfig& cfg) {
    return load_checkpoint(require(cfg.checkpoint, "checkpoint"));
}

} // namespace

fs::path output_root_from_env() {
    const char* env = std::getenv("RTAD_OUTPUT_ROOT");
    return (env && *env) ? fs::path(env) : fs::path("runs");
}

fs::path make_run_dir(const fs::path& root, const std::string& command) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    localtime_r(&now, &tm);
    std::ostringstream stem;
    stem << command << "-" << std::put_time(&tm, "%Y%m%d-%H%M%S");
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) {
        throw ValidationError("cannot create output root " + root.string() + ": " + ec.message());
    }
    fs::path dir = root / stem.str();
    for (int n = 2; !fs::create_directory(dir, ec); ++n) {
        if (ec) {
            throw ValidationError("cannot create run directory " + dir.string() + ": " + ec.message());
        }
        dir = root / (stem.str() + "-" + std::to_string(n));
    }
    return dir;
}

fs::path cmd_synth(const RunConfig& cfg, const CommandContext& ctx) {
    cfg.validate();
    SynthConfig sc = default_synth_config(cfg.synth_metrics, cfg.synth_length, cfg.synth_seed);
    sc.noise_std = cfg.synth_noise_std;
    sc.faults = plan_faults(sc, cfg.synth_faults);
    MetricMatrix all = generate_synthetic(sc);

    const auto n = all.length();
    const auto split = static_cast<std::size_t>(cfg.synth_train_fraction * static_cast<double>(n));
    if (split < 1 || split >= n) {
        throw ConfigError("synth.train_fraction leaves an empty train or test range");
    }
    MetricMatrix train = all.slice(0, split);
    MetricMatrix test = all.slice(split, n);
    fs::path dir = start_run(cfg, ctx, "synth");
    write_csv(train, dir / "train.csv");
    write_labels(train.labels, dir / "train_labels.txt");
    write_csv(test, dir / "test.csv");
    write_labels(test.labels, dir / "test_labels.txt");
    write_interpretation(test.culprits, dir / "test_interpretation.txt");

    const auto anomalous = std::count(all.labels.begin(), all.labels.end(), 1);
    const double ratio = static_cast<double>(anomalous) / static_cast<double>(n);
    std::size_t spikes = 0;
    for (const auto& f : sc.faults) {
        spikes += f.kind == FaultKind::spike;
    }
    json summary = {{"length", n},
                    {"metrics", all.metrics()},
                    {"seed", cfg.synth_seed},
                    {"anomaly_ratio", ratio},
                    {"anomalous_points", anomalous},
                    {"faults", sc.faults.size()},
                    {"spike_faults", spikes},
                    {"correlation_break_faults", sc.faults.size() - spikes},
                    {"train_length", train.length()},
                    {"test_length", test.length()},
                    {"test_segments", test.culprits.size()}};
    write_json(dir / "summary.json", summary);

    LinePlot plot;
    plot.title = "synthetic series (first 1000 points)";
    plot.x_label = "t";
    plot.y_label = "value";
    const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd",
                             "#8c564b", "#e377c2", "#7f7f7f", "#17becf"};
    const std::size_t shown = std::min<std::size_t>(n, 1000);
    for (std::size_t j = 0; j < std::min<std::size_t>(all.metrics(), 8); ++j) {
        LineSeries s{all.metric_names[j], palette[j], {}, {}, false};
        for (std::size_t t = 0; t < shown; ++t) {
            s.x.push_back(static_cast<double>(t));
            s.y.push_back(all.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)));
        }
        plot.series.push_back(std::move(s));
    }
    plot.bands = label_bands(std::vector<int>(all.labels.begin(), all.labels.begin() +
                                                                      static_cast<std::ptrdiff_t>(shown)));
    write_svg(dir / "series.svg", plot);

    say(ctx) << "N=" << n << " M=" << all.metrics() << " anomaly_ratio=" << std::fixed
             << std::setprecision(4) << ratio << std::defaultfloat << " faults=" << sc.faults.size()
             << "\n"
             << "run: " << dir.string() << "\n";
    return dir;
}

fs::path cmd_train(const RunConfig& cfg, const CommandContext& ctx) {
    cfg.validate();
    MetricMatrix train = load_series(cfg, require(cfg.train_data, "train_data"), cfg.train_labels, {});
    TrainConfig tc = cfg.train;
    tc.model.metrics = train.metrics();
    fs::path dir = start_run(cfg, ctx, "train");

    json epochs = json::array();
    auto on_epoch = [&](const EpochLog& log) {
        epochs.push_back({{"phase", log.phase}, {"epoch", log.epoch}, {"loss", log.loss}});
        if (ctx.log) {
            *ctx.log << "phase " << log.phase << " epoch " << log.epoch + 1 << "/" << tc.pu.epochs
                     << " loss " << log.loss << "\n";
        }
    };
    const auto t0 = std::chrono::steady_clock::now();
    TrainResult result = train_detector(train, tc, on_epoch);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.detector.metric_names = train.metric_names;

    save_checkpoint(dir / "model.rtad", result.detector);
    const TrainingReport& r = result.report;
    json report = {{"beta", r.beta},
                   {"seed", r.seed},
                   {"window", tc.model.window},
                   {"train_stride", tc.train_stride},
                   {"labeled", r.labeled},
                   {"unlabeled", r.unlabeled},
                   {"pseudo_positive", r.pseudo_positive},
                   {"pseudo_positive_rate", r.pseudo_positive_rate()},
                   {"unlabeled_true_positive", r.unlabeled_true_positive},
                   {"phase1_losses", r.phase1_losses},
                   {"phase3_losses", r.phase3_losses},
                   {"epochs", epochs},
                   {"train_seconds", seconds}};
    write_json(dir / "training_report.json", report);

    LinePlot plot;
    plot.title = "training objective";
    plot.x_label = "epoch";
    plot.y_label = "mean loss";
    LineSeries p1{"phase 1", "#1f77b4", {}, r.phase1_losses, false};
    LineSeries p3{"phase 3", "#ff7f0e", {}, r.phase3_losses, false};
    for (std::size_t i = 0; i < p1.y.size(); ++i) p1.x.push_back(static_cast<double>(i + 1));
    for (std::size_t i = 0; i < p3.y.size(); ++i) p3.x.push_back(static_cast<double>(i + 1));
    plot.series = {p1, p3};
    write_svg(dir / "loss.svg", plot);

    say(ctx) << "windows=" << r.labeled + r.unlabeled << " labeled=" << r.labeled
             << " pseudo_positive=" << r.pseudo_positive << " final_loss="
             << (r.phase3_losses.empty() ? 0.0 : r.phase3_losses.back()) << "\n"
             << "checkpoint: " << (dir / "model.rtad").string() << "\n"
             << "run: " << dir.string() << "\n";
    return dir;
}

fs::path cmd_detect(const RunConfig& cfg, const CommandContext& ctx) {
    cfg.validate();
    Detector det = load_detector(cfg);
    MetricMatrix test = load_series(cfg, require(cfg.test_data, "test_data"), cfg.test_labels, {});
    ScoreSeries series = det.score(test);
    fs::path dir = start_run(cfg, ctx, "detect");

    std::vector<int> truth;
    if (test.has_labels()) {
        truth = aligned_truth(series, test.labels);
        ThresholdResult best = grid_search_threshold(series.scores, truth);
        series.apply_threshold(best.threshold, truth);

        MetricMatrix norm = det.normalize(test);
        std::vector<int> sigma = three_sigma_predictions(norm, det.moments);
        std::vector<int> sigma_aligned(sigma.begin() + static_cast<std::ptrdiff_t>(series.first),
                                       sigma.end());
        json eval = eval_json(best.eval);
        eval["threshold"] = best.threshold;
        eval["scored_from"] = series.first;
        eval["three_sigma"] = eval_json(evaluate_adjusted(sigma_aligned, truth));
        write_json(dir / "eval.json", eval);
        say(ctx) << "f1=" << best.eval.f1 << " precision=" << best.eval.precision
                 << " recall=" << best.eval.recall << " threshold=" << best.threshold
                 << " three_sigma_f1=" << eval["three_sigma"]["f1"].get<double>() << "\n";
    } else {
        series.apply_threshold(cfg.threshold);
    }

    std::ostringstream csv;
    csv << "timestamp,score,pred,adjusted_pred\n";
    csv << std::setprecision(10);
    for (std::size_t i = 0; i < series.size(); ++i) {
        const int adj = series.adjusted_predictions.empty() ? series.predictions[i]
                                                            : series.adjusted_predictions[i];
        csv << series.first + i << "," << series.scores[i] << "," << series.predictions[i] << ","
            << adj << "\n";
    }
    write_text(dir / "scores.csv", csv.str());

    LinePlot plot;
    plot.title = "anomaly score";
    plot.x_label = "t";
    plot.y_label = "score";
    LineSeries s{"score", "#1f77b4", {}, series.scores, false};
    for (std::size_t i = 0; i < series.size(); ++i) {
        s.x.push_back(static_cast<double>(series.first + i));
    }
    plot.series.push_back(std::move(s));
    plot.hlines.push_back({"threshold", "#d62728", series.threshold});
    if (test.has_labels()) {
        plot.bands = label_bands(test.labels);
    }
    write_svg(dir / "scores.svg", plot);

    say(ctx) << "scored=" << series.size() << " flagged="
             << std::count(series.predictions.begin(), series.predictions.end(), 1) << "\n"
             << "run: " << dir.string() << "\n";
    return dir;
}

fs::path cmd_localize(const RunConfig& cfg, const CommandContext& ctx) {
    const LocalizeMethod method = parse_localize_method(cfg.localize_method);
    cfg.validate();
    Detector det = load_detector(cfg);
    MetricMatrix test = load_series(cfg, require(cfg.test_data, "test_data"), cfg.test_labels,
                                    cfg.test_interpretation);
    const MetricMatrix norm = det.normalize(test);
    const std::size_t w = det.window();
    fs::path dir = start_run(cfg, ctx, "localize");

    std::vector<CulpritSegment> segments;
    if (cfg.localize_segments == "truth") {
        if (!test.culprits.empty()) {
            segments = test.culprits;
        } else if (test.has_labels()) {
            for (auto [s, e] : runs_of_ones(test.labels)) {
                segments.push_back({s, e, {}});
            }
        } else {
            throw ConfigError("localize.segments = truth needs test_interpretation or test_labels");
        }
    } else {
        ScoreSeries series = score_series(det.model, det.normalizer, norm);
        series.apply_threshold(cfg.threshold);
        for (auto [s, e] : runs_of_ones(series.predictions, series.first)) {
            CulpritSegment seg{s, e, {}};
            for (const auto& c : test.culprits) {
                if (c.start <= e && s <= c.end) {
                    seg.metrics.insert(seg.metrics.end(), c.metrics.begin(), c.metrics.end());
                }
            }
            std::sort(seg.metrics.begin(), seg.metrics.end());
            seg.metrics.erase(std::unique(seg.metrics.begin(), seg.metrics.end()), seg.metrics.end());
            segments.push_back(std::move(seg));
        }
    }

    json items = json::array();
    std::vector<std::vector<std::size_t>> rankings;
    std::vector<std::vector<std::size_t>> culprits;
    for (const auto& seg : segments) {
        json item = {{"start", seg.start}, {"end", seg.end}};
        if (!seg.metrics.empty()) {
            item["culprits"] = names_of(seg.metrics, det.metric_names);
        }
        if (seg.end + 1 < w || seg.end >= norm.length()) {
            item["skipped"] = "segment ends before the first full window";
            items.push_back(std::move(item));
            continue;
        }
        LocalizationReport rep =
            rank_metrics(method, det.model, det.attention_normal, det.moments, norm, seg.start, seg.end);
        json delta = json::object();
        for (Eigen::Index j = 0; j < rep.delta.size(); ++j) {
            delta[det.metric_names.at(static_cast<std::size_t>(j))] = rep.delta(j);
        }
        item["delta"] = std::move(delta);
        item["ranking"] = names_of(rep.ranking, det.metric_names);
        std::vector<std::size_t> top(rep.ranking.begin(),
                                     rep.ranking.begin() +
                                         static_cast<std::ptrdiff_t>(std::min(cfg.localize_k, rep.ranking.size())));
        item["recommended"] = names_of(top, det.metric_names);
        if (!seg.metrics.empty()) {
            item["hit"] = hit_at_k({rep.ranking}, {seg.metrics}, cfg.localize_k) > 0.0;
            rankings.push_back(rep.ranking);
            culprits.push_back(seg.metrics);
        }
        items.push_back(std::move(item));
    }

    json out = {{"method", to_string(method)},
                {"k", cfg.localize_k},
                {"segments", items},
                {"evaluated_segments", rankings.size()}};
    if (!rankings.empty()) {
        const double hit = hit_at_k(rankings, culprits, cfg.localize_k);
        out["hit_at_k"] = hit;
        say(ctx) << "hit@" << cfg.localize_k << "=" << hit << " over " << rankings.size()
                 << " segments (" << to_string(method) << ")\n";
    } else {
        out["hit_at_k"] = nullptr;
        say(ctx) << "localized " << segments.size() << " segments (no culprit labels)\n";
    }
    write_json(dir / "localization.json", out);
    say(ctx) << "run: " << dir.string() << "\n";
    return dir;
}

fs::path cmd_sweep_beta(const RunConfig& cfg, const CommandContext& ctx) {
    cfg.validate();
    MetricMatrix train = load_series(cfg, require(cfg.train_data, "train_data"), cfg.train_labels, {});
    MetricMatrix test = load_series(cfg, require(cfg.test_data, "test_data"),
                                    require(cfg.test_labels, "test_labels"), {});
    std::vector<double> betas = cfg.sweep_betas;
    std::sort(betas.begin(), betas.end());
    betas.erase(std::unique(betas.begin(), betas.end()), betas.end());
    fs::path dir = start_run(cfg, ctx, "sweep-beta");

    TrainConfig tc = cfg.train;
    tc.model.metrics = train.metrics();
    auto on_epoch = [&](const EpochLog& log) {
        if (ctx.log) {
            *ctx.log << "phase " << log.phase << " epoch " << log.epoch + 1 << "/" << tc.pu.epochs
                     << " loss " << log.loss << "\n";
        }
    };
    SweepContext sweep = prepare_sweep(train, tc, on_epoch);

    std::ostringstream csv;
    csv << "beta,pseudo_positive,pseudo_positive_rate,threshold,precision,recall,f1\n";
    LineSeries f1{"point-adjusted F1", "#1f77b4", {}, {}, true};
    for (double beta : betas) {
        tc.pu.beta = beta;
        if (ctx.log) {
            *ctx.log << "beta " << beta << "\n";
        }
        TrainResult r = finish_detector(sweep, tc, on_epoch);
        ScoreSeries series = r.detector.score(test);
        ThresholdResult best = grid_search_threshold(series.scores, aligned_truth(series, test.labels));
        csv << beta << "," << r.report.pseudo_positive << "," << r.report.pseudo_positive_rate()
            << "," << best.threshold << "," << best.eval.precision << "," << best.eval.recall << ","
            << best.eval.f1 << "\n";
        f1.x.push_back(beta);
        f1.y.push_back(best.eval.f1);
        say(ctx) << "beta=" << beta << " pseudo_positive=" << r.report.pseudo_positive
                 << " f1=" << best.eval.f1 << "\n";
    }
    write_text(dir / "sweep.csv", csv.str());

    LinePlot plot;
    plot.title = "F1 against the pseudo-label threshold";
    plot.x_label = "beta";
    plot.y_label = "F1";
    plot.series.push_back(std::move(f1));
    write_svg(dir / "sweep.svg", plot);
    say(ctx) << "run: " << dir.string() << "\n";
    return dir;
}

ExitCode exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) {
        return kExitConfig;
    }
    if (dynamic_cast<const CheckpointError*>(&e)) {
        return kExitCheckpoint;
    }
    if (dynamic_cast<const Error*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e)) {
        return kExitData;
    }
    return kExitFailure;
}

int run_command(const std::string& name, const RunConfig& cfg, const CommandContext& ctx,
                std::ostream& err) {
    try {
        if (name == "synth") {
            cmd_synth(cfg, ctx);
        } else if (name == "train") {
            cmd_train(cfg, ctx);
        } else if (name == "detect") {
            cmd_detect(cfg, ctx);
        } else if (name == "localize") {
            cmd_localize(cfg, ctx);
        } else if (name == "sweep-beta") {
            cmd_sweep_beta(cfg, ctx);
        } else {
            throw ConfigError("unknown command '" + name + "'");
        }
    } catch (const std::exception& e) {
        err << "rtad " << name << ": " << e.what() << "\n";
        return exit_code_for(e);
    }
    return kExitOk;
}

} // namespace rtad::app
