#pragma once

// Command implementations behind the `aura` binary: train, eval, detect,
// ablate, gates, generate, plot. Each writes deterministic artifacts under
// out.dir (byte-stable given config and seed, modulo the generated_at_utc
// stamp).

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aura/config.hpp"
#include "aura/context.hpp"
#include "aura/data.hpp"
#include "aura/detect.hpp"
#include "aura/embed_client.hpp"
#include "aura/model.hpp"
#include "aura/stats.hpp"
#include "aura/svg.hpp"
#include "aura/train.hpp"

namespace aura::cli {

using config::RunConfig;
using nlohmann::ordered_json;

inline std::string utc_now_string() {
    const auto now = std::chrono::system_clock::now();
    return data::format_timestamp(std::chrono::duration_cast<std::chrono::seconds>(
                                      now.time_since_epoch())
                                      .count());
}

inline std::unique_ptr<context::TextEmbedder> make_embedder(const RunConfig& cfg) {
    const std::string kind = cfg.get_string("embedder.kind");
    const std::size_t dim = cfg.get_size("model.text_embed_dim");
    if (kind == "hash") return std::make_unique<context::HashingEmbedder>(dim);
    if (kind == "service") {
        context::ServiceEmbedderConfig sc;
        sc.url = cfg.get_string("embedder.url");
        if (const char* env = std::getenv("AURA_EMBEDDER_URL"); env && *env) sc.url = env;
        sc.dim = dim;
        sc.timeout_ms = static_cast<int>(cfg.get_int("embedder.timeout_ms"));
        sc.max_retries = static_cast<int>(cfg.get_int("embedder.retries"));
        return std::make_unique<context::ServiceEmbedder>(sc);
    }
    throw ConfigError("embedder.kind must be hash or service, got '" + kind + "'");
}

inline data::SyntheticConfig synth_config(const RunConfig& cfg) {
    data::SyntheticConfig sc;
    sc.n_series = cfg.get_size("synth.n_series");
    sc.series_len = cfg.get_size("synth.series_len");
    sc.seed = static_cast<std::uint64_t>(cfg.get_int("synth.seed"));
    sc.a1 = cfg.get_double("synth.a1");
    sc.b1 = cfg.get_double("synth.b1");
    sc.b2 = cfg.get_double("synth.b2");
    sc.demand_gain = cfg.get_double("synth.demand_gain");
    sc.noise_std = cfg.get_double("synth.noise_std");
    sc.base_n2 = cfg.get_double("synth.base_n2");
    sc.base_ip = cfg.get_double("synth.base_ip");
    sc.profile_amplitude = cfg.get_double("synth.amplitude");
    sc.profile_period = cfg.get_double("synth.period");
    sc.profile_smoothness = cfg.get_double("synth.smoothness");
    sc.profile_jitter = cfg.get_double("synth.jitter");
    sc.osc_amplitude = cfg.get_double("synth.osc_amplitude");
    sc.osc_period = cfg.get_double("synth.osc_period");
    sc.regime_amplitude = cfg.get_double("synth.regime_amplitude");
    sc.regime_block_days = cfg.get_size("synth.regime_block_days");
    sc.weekend_demand = cfg.get_double("synth.weekend_demand");
    sc.static_spread = cfg.get_double("synth.static_spread");
    sc.geo_gain = cfg.get_double("synth.geo_gain");
    sc.legacy_fraction = cfg.get_double("synth.legacy_fraction");
    sc.sensor_noise = cfg.get_double("synth.sensor_noise");
    sc.fault.onset_frac = cfg.get_double("synth.fault_onset_frac");
    sc.fault.drift = cfg.get_double("synth.fault_drift");
    sc.fault.affected_fraction = cfg.get_double("synth.fault_fraction");
    return sc;
}

struct Pipeline {
    data::Dataset ds;
    data::SplitResult split;
    std::size_t input_len = 0, horizon = 0;
};

inline Pipeline build_pipeline(const RunConfig& cfg) {
    Pipeline p;
    const std::string source = cfg.get_string("data.source");
    if (source == "synthetic") {
        p.ds = data::generate_synthetic(synth_config(cfg));
    } else if (source == "csv") {
        const std::string path = cfg.get_string("data.csv");
        if (path.empty()) throw ConfigError("data.source=csv requires data.csv");
        data::DatasetSchema schema{cfg.get_string("data.endo_col"), cfg.get_list("data.exo_cols")};
        p.ds = data::load_csv_dataset(path, schema, cfg.get_string("data.sidecar"));
        if (p.ds.attrs_missing)
            std::cerr << "warning: static attributes missing for some series; "
                         "using empty text and zero geo\n";
    } else {
        throw ConfigError("data.source must be synthetic or csv, got '" + source + "'");
    }

    p.input_len = cfg.get_size("data.input_len");
    p.horizon = cfg.get_size("data.horizon");
    auto windows = data::make_windows(p.ds, p.input_len, p.horizon, cfg.get_size("data.stride"));
    if (windows.empty()) throw ConfigError("dataset yields no windows for the configured T/S");

    std::int64_t train_end, val_end;
    if (!cfg.get_string("data.train_end").empty()) {
        train_end = data::parse_timestamp(cfg.get_string("data.train_end"));
        val_end = cfg.get_string("data.val_end").empty()
                      ? train_end
                      : data::parse_timestamp(cfg.get_string("data.val_end"));
    } else {
        std::int64_t t_min = windows.front().t0, t_max = windows.front().t0;
        for (const auto& s : p.ds.series)
            for (const auto& r : s.rows) {
                t_min = std::min(t_min, r.ts);
                t_max = std::max(t_max, r.ts);
            }
        const double span = static_cast<double>(t_max - t_min);
        train_end = t_min + static_cast<std::int64_t>(span * cfg.get_double("data.train_frac"));
        val_end = train_end +
                  static_cast<std::int64_t>(span * cfg.get_double("data.val_frac"));
    }
    p.split = data::chronological_split(windows, train_end, val_end);
    return p;
}

inline model::ModelConfig model_config(const RunConfig& cfg, const Pipeline& p) {
    model::ModelConfig mc;
    mc.patch_len = cfg.get_size("model.patch_len");
    mc.d_model = cfg.get_size("model.d_model");
    mc.n_layers = cfg.get_size("model.n_layers");
    mc.n_heads = cfg.get_size("model.n_heads");
    mc.n_experts = cfg.get_size("model.n_experts");
    mc.moe_top_k = cfg.get_size("model.moe_top_k");
    mc.ffn_hidden = cfg.get_size("model.ffn_hidden");
    mc.endo_len = p.input_len;
    mc.horizon = p.horizon;
    mc.exo_dim = p.ds.exo_dim();
    mc.exo_hist_len = mc.exo_dim > 0 ? p.input_len : 0;
    mc.exo_fut_len = mc.exo_dim > 0 ? p.horizon : 0;
    mc.text_embed_dim = cfg.get_size("model.text_embed_dim");
    mc.ablation = model::AblationFlags::parse(cfg.get_string("train.ablation"));
    mc.ctx_rules.temp_low_c = cfg.get_double("context.temp_low");
    mc.ctx_rules.temp_high_c = cfg.get_double("context.temp_high");
    mc.ctx_rules.humidity_low = cfg.get_double("context.humidity_low");
    mc.ctx_rules.humidity_high = cfg.get_double("context.humidity_high");
    mc.ctx_rules.highland_cutoff_m = cfg.get_double("context.highland_m");
    mc.prompt_template = cfg.get_string("context.template");
    return mc;
}

inline train::TrainConfig train_config(const RunConfig& cfg) {
    train::TrainConfig tc;
    tc.learning_rate = cfg.get_double("train.lr");
    tc.max_epochs = cfg.get_size("train.max_epochs");
    tc.patience = cfg.get_size("train.patience");
    tc.batch_size = cfg.get_size("train.batch_size");
    tc.seed = static_cast<std::uint64_t>(cfg.get_int("train.seed"));
    tc.ablation = model::AblationFlags::parse(cfg.get_string("train.ablation"));
    return tc;
}

inline std::filesystem::path out_dir(const RunConfig& cfg) {
    std::filesystem::path dir = cfg.get_string("out.dir");
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot write " + path.string());
    f << body;
}

inline void write_json(const std::filesystem::path& path, const ordered_json& j) {
    write_text(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

inline int cmd_train(const RunConfig& cfg, std::ostream& log) {
    Pipeline p = build_pipeline(cfg);
    auto embedder = make_embedder(cfg);
    model::AuraModel m(model_config(cfg, p),
                       static_cast<std::uint64_t>(cfg.get_int("model.seed")));
    train::TrainConfig tc = train_config(cfg);

    log << "training on " << p.split.train.size() << " windows (" << p.split.val.size()
        << " val, " << p.split.test.size() << " test, " << p.split.excluded_abnormal
        << " abnormal excluded from train/val)\n";
    train::TrainReport rep = train::train_loop(m, p.split.train, p.split.val, tc, *embedder);

    const auto dir = out_dir(cfg);
    m.save_checkpoint((dir / "model.ckpt").string());

    ordered_json j;
    j["kind"] = "train_report";
    j["generated_at_utc"] = utc_now_string();
    j["seed"] = rep.seed;
    j["model_seed"] = cfg.get_int("model.seed");
    j["ablation"] = cfg.get_string("train.ablation");
    j["n_train"] = rep.n_train;
    j["n_val"] = rep.n_val;
    j["excluded_abnormal"] = p.split.excluded_abnormal;
    j["excluded_unlabeled"] = p.split.excluded_unlabeled;
    j["train_loss"] = rep.train_loss;
    j["val_loss"] = rep.val_loss;
    j["best_epoch"] = rep.best_epoch;
    j["stop_epoch"] = rep.stop_epoch;
    j["wall_seconds"] = rep.wall_seconds;
    write_json(dir / "train_report.json", j);
    log << "best epoch " << rep.best_epoch << " val " << rep.val_loss[rep.best_epoch - 1]
        << "; checkpoint " << (dir / "model.ckpt").string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

inline int cmd_eval(const RunConfig& cfg, const std::string& checkpoint, std::ostream& log) {
    model::AuraModel m = model::AuraModel::load_checkpoint(checkpoint);
    Pipeline p = build_pipeline(cfg);
    auto embedder = make_embedder(cfg);
    const auto& split = p.split.test.empty() ? p.split.train : p.split.test;

    train::EvalResult ev = train::evaluate(m, split, *embedder);
    ordered_json j;
    j["kind"] = "eval_report";
    j["generated_at_utc"] = utc_now_string();
    j["checkpoint"] = checkpoint;
    j["n_samples"] = ev.n;
    j["mse"] = ev.mse;
    j["mae"] = ev.mae;
    j["mse_raw"] = ev.mse_raw;
    j["mae_raw"] = ev.mae_raw;

    ordered_json samples = ordered_json::array();
    const std::size_t keep = std::min<std::size_t>(cfg.get_size("eval.plot_samples"),
                                                   split.size());
    for (std::size_t i = 0; i < keep; ++i) {
        const auto& s = split[i];
        model::ForwardResult r = m.forward(s, *embedder);
        ordered_json rec;
        rec["sample_id"] = s.sample_id();
        rec["history"] = s.endo_hist;
        rec["truth"] = s.endo_target;
        rec["forecast"] = r.forecast;
        samples.push_back(std::move(rec));
    }
    j["samples"] = std::move(samples);

    const auto dir = out_dir(cfg);
    write_json(dir / "eval_report.json", j);
    log << "eval over " << ev.n << " samples: mse " << ev.mse << " mae " << ev.mae
        << " (raw " << ev.mse_raw << "/" << ev.mae_raw << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------
// detect
// ---------------------------------------------------------------------------

inline int cmd_detect(const RunConfig& cfg, const std::string& checkpoint, std::ostream& log) {
    model::AuraModel m = model::AuraModel::load_checkpoint(checkpoint);
    Pipeline p = build_pipeline(cfg);
    auto embedder = make_embedder(cfg);

    detect::DetectOptions opt;
    opt.target_far = cfg.get_double("detect.target_far");
    opt.holdout = cfg.get_bool("detect.holdout");
    opt.seed = static_cast<std::uint64_t>(cfg.get_int("detect.seed"));
    opt.metric = detect::score_metric_from_string(cfg.get_string("detect.metric"));
    detect::DetectionReport rep = detect::detect(m, p.split.test, opt, *embedder);

    ordered_json j;
    j["kind"] = "detection_report";
    j["generated_at_utc"] = utc_now_string();
    j["checkpoint"] = checkpoint;
    j["target_far"] = rep.threshold.target_far;
    j["threshold"] = rep.threshold.value;
    j["quantile_method"] = rep.threshold.quantile_method;
    j["n_normal_calibration"] = rep.threshold.n_normal_calibration;
    j["holdout_protocol"] = rep.holdout_protocol;
    if (rep.tar)
        j["tar"] = *rep.tar;
    else
        j["tar"] = "undefined";
    j["far"] = rep.far;
    j["far_calibration"] = rep.far_calibration;
    j["n_normal"] = rep.n_normal;
    j["n_abnormal"] = rep.n_abnormal;
    j["n_holdout"] = rep.n_holdout;
    j["flagged"] = rep.flagged_ids;
    ordered_json hist = ordered_json::array();
    for (const auto& b : rep.histogram) {
        ordered_json bin;
        bin["lo"] = b.lo;
        bin["hi"] = b.hi;
        bin["normal"] = b.normal;
        bin["abnormal"] = b.abnormal;
        hist.push_back(std::move(bin));
    }
    j["histogram"] = std::move(hist);

    const auto dir = out_dir(cfg);
    write_json(dir / "detection_report.json", j);

    std::string csv = "sample_id,score,label,flagged\n";
    for (const auto& s : rep.scores) {
        const bool flagged = s.score > rep.threshold.value;
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", s.score);
        csv += s.sample_id + "," + buf + "," + data::label_name(s.label) + "," +
               (flagged ? "1" : "0") + "\n";
    }
    write_text(dir / "scores.csv", csv);

    log << "threshold " << rep.threshold.value << " (target FAR " << rep.threshold.target_far
        << "); TAR " << (rep.tar ? std::to_string(*rep.tar) : std::string("undefined"))
        << " FAR " << rep.far << " over " << rep.n_abnormal << " abnormal / " << rep.n_holdout
        << " held-out normal\n";
    return 0;
}

// ---------------------------------------------------------------------------
// ablate: the eight-variant matrix in fixed row order.
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& ablation_variants() {
    static const std::vector<std::string> kOrder = {
        "full",           "no_static",         "no_events",   "no_exog",
        "uniform_concat", "uniform_crossattn", "uniform_moe", "no_gated_residual"};
    return kOrder;
}

struct AblationRow {
    std::string variant;
    double mse = 0, mae = 0, far = 0;
    std::optional<double> tar;
};

inline AblationRow run_ablation_variant(const RunConfig& cfg, const Pipeline& p,
                                        const std::string& variant,
                                        const context::TextEmbedder& embedder) {
    model::ModelConfig mc = model_config(cfg, p);
    mc.ablation = model::AblationFlags::parse(variant == "full" ? "" : variant);
    model::AuraModel m(mc, static_cast<std::uint64_t>(cfg.get_int("model.seed")));
    train::TrainConfig tc = train_config(cfg);
    tc.ablation = mc.ablation;
    train::train_loop(m, p.split.train, p.split.val, tc, embedder);

    std::vector<data::SampleRecord> normal_test;
    for (const auto& s : p.split.test)
        if (s.label == data::Label::normal) normal_test.push_back(s);

    AblationRow row;
    row.variant = variant;
    if (!normal_test.empty()) {
        train::EvalResult ev = train::evaluate(m, normal_test, embedder);
        row.mse = ev.mse;
        row.mae = ev.mae;
    }
    bool any_abnormal = false;
    for (const auto& s : p.split.test) any_abnormal |= s.label == data::Label::abnormal;
    if (any_abnormal && normal_test.size() >= 40) {
        detect::DetectOptions opt;
        opt.target_far = cfg.get_double("detect.target_far");
        opt.holdout = cfg.get_bool("detect.holdout");
        opt.seed = static_cast<std::uint64_t>(cfg.get_int("detect.seed"));
        detect::DetectionReport rep = detect::detect(m, p.split.test, opt, embedder);
        row.tar = rep.tar;
        row.far = rep.far;
    }
    return row;
}

inline int cmd_ablate(const RunConfig& cfg, std::ostream& log) {
    Pipeline p = build_pipeline(cfg);
    auto embedder = make_embedder(cfg);

    std::vector<AblationRow> rows;
    for (const auto& variant : ablation_variants()) {
        log << "variant " << variant << "..." << std::flush;
        rows.push_back(run_ablation_variant(cfg, p, variant, *embedder));
        log << " mse " << rows.back().mse << "\n";
    }

    const auto dir = out_dir(cfg);
    std::string csv = "variant,mse,mae,tar,far\n";
    ordered_json jrows = ordered_json::array();
    for (const auto& r : rows) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s,%.8f,%.8f,%s,%.8f\n", r.variant.c_str(), r.mse,
                      r.mae, r.tar ? std::to_string(*r.tar).c_str() : "undefined", r.far);
        csv += buf;
        ordered_json jr;
        jr["variant"] = r.variant;
        jr["mse"] = r.mse;
        jr["mae"] = r.mae;
        if (r.tar)
            jr["tar"] = *r.tar;
        else
            jr["tar"] = "undefined";
        jr["far"] = r.far;
        jrows.push_back(std::move(jr));
    }
    write_text(dir / "ablation.csv", csv);

    ordered_json j;
    j["kind"] = "ablation_report";
    j["generated_at_utc"] = utc_now_string();
    j["seed"] = cfg.get_int("train.seed");
    j["rows"] = std::move(jrows);
    write_json(dir / "ablation.json", j);
    return 0;
}

// ---------------------------------------------------------------------------
// gates: per-sample alpha trace statistics, histogram SVG, rank-sum test.
// ---------------------------------------------------------------------------

inline int cmd_gates(const RunConfig& cfg, const std::string& checkpoint, std::ostream& log) {
    model::AuraModel m = model::AuraModel::load_checkpoint(checkpoint);
    Pipeline p = build_pipeline(cfg);
    auto embedder = make_embedder(cfg);
    const auto& split = p.split.test.empty() ? p.split.train : p.split.test;
    if (split.empty()) throw ConfigError("gates: no samples to trace");

    std::vector<double> alpha_hist, alpha_fut;
    for (const auto& s : split) {
        model::ForwardResult r = m.forward(s, *embedder);
        double ah = 0, af = 0;
        std::size_t nh = 0, nf = 0;
        for (const auto& t : r.traces) {
            if (t.alpha_hist) {
                ah += *t.alpha_hist;
                ++nh;
            }
            if (t.alpha_fut) {
                af += *t.alpha_fut;
                ++nf;
            }
        }
        if (nh) alpha_hist.push_back(ah / static_cast<double>(nh));
        if (nf) alpha_fut.push_back(af / static_cast<double>(nf));
    }
    if (alpha_hist.empty() || alpha_fut.empty())
        throw ConfigError("gates: model has no gated cross-attention stages");

    auto stats_of = [](const std::vector<double>& v) {
        ordered_json s;
        s["mean"] = stats::mean(v);
        s["median"] = stats::median(v);
        s["q25"] = stats::quantile(v, 0.25);
        s["q75"] = stats::quantile(v, 0.75);
        s["std"] = stats::std_dev(v);
        return s;
    };
    stats::RankSumResult rs = stats::rank_sum_greater(alpha_fut, alpha_hist);

    ordered_json j;
    j["kind"] = "gates_report";
    j["generated_at_utc"] = utc_now_string();
    j["checkpoint"] = checkpoint;
    j["n_samples"] = alpha_hist.size();
    j["alpha_hist"] = stats_of(alpha_hist);
    j["alpha_fut"] = stats_of(alpha_fut);
    j["rank_sum_fut_greater"] = {{"u", rs.u_statistic}, {"z", rs.z}, {"p_one_sided", rs.p_one_sided}};
    j["alpha_hist_values"] = alpha_hist;
    j["alpha_fut_values"] = alpha_fut;

    const auto dir = out_dir(cfg);
    write_json(dir / "gates_report.json", j);
    write_text(dir / "gates_hist.svg",
               svg::histogram({{"alpha_hist", "#4477aa", alpha_hist},
                               {"alpha_fut", "#cc6677", alpha_fut}},
                              cfg.get_size("gates.bins"), "gate coefficients"));
    log << "alpha_hist mean " << stats::mean(alpha_hist) << ", alpha_fut mean "
        << stats::mean(alpha_fut) << ", one-sided rank-sum p " << rs.p_one_sided << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// generate: write the synthetic corpus as CSV + sidecar.
// ---------------------------------------------------------------------------

inline int cmd_generate(const RunConfig& cfg, std::ostream& log) {
    data::Dataset ds = data::generate_synthetic(synth_config(cfg));
    const auto dir = out_dir(cfg);
    data::write_csv(ds, (dir / "data.csv").string());
    data::write_sidecar(ds, (dir / "data.attrs.json").string());
    std::size_t rows = 0;
    for (const auto& s : ds.series) rows += s.rows.size();
    log << "wrote " << ds.series.size() << " series (" << rows << " rows) to "
        << (dir / "data.csv").string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// plot: render SVG charts from report JSON files.
// ---------------------------------------------------------------------------

inline int cmd_plot(const RunConfig& cfg, const std::vector<std::string>& report_paths,
                    std::ostream& log) {
    if (report_paths.empty()) throw ConfigError("plot: no report files given");
    const auto dir = out_dir(cfg);
    for (const auto& path : report_paths) {
        std::ifstream f(path);
        if (!f) throw ParseError("cannot open report: " + path);
        ordered_json j;
        try {
            f >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path + ": " + e.what());
        }
        const std::string kind = j.value("kind", "");
        const std::string stem = std::filesystem::path(path).stem().string();

        if (kind == "eval_report") {
            std::size_t i = 0;
            for (const auto& rec : j["samples"]) {
                std::vector<double> truth = rec["truth"].get<std::vector<double>>();
                std::vector<double> forecast = rec["forecast"].get<std::vector<double>>();
                const std::string out =
                    (dir / (stem + "_sample" + std::to_string(i) + ".svg")).string();
                write_text(out, svg::line_chart({{"truth", "#4477aa", truth},
                                                 {"forecast", "#cc6677", forecast}},
                                                rec["sample_id"].get<std::string>()));
                std::vector<double> residual(truth.size());
                for (std::size_t k = 0; k < truth.size(); ++k)
                    residual[k] = forecast[k] - truth[k];
                write_text((dir / (stem + "_sample" + std::to_string(i) + "_residual.svg"))
                               .string(),
                           svg::line_chart({{"residual", "#117733", residual}},
                                           rec["sample_id"].get<std::string>() + " residual"));
                ++i;
            }
            log << "rendered " << i << " forecast charts from " << path << "\n";
        } else if (kind == "detection_report") {
            std::vector<double> normal, abnormal;
            // reconstruct score sets from the embedded histogram
            for (const auto& bin : j["histogram"]) {
                const double mid = (bin["lo"].get<double>() + bin["hi"].get<double>()) / 2.0;
                for (std::size_t k = 0; k < bin["normal"].get<std::size_t>(); ++k)
                    normal.push_back(mid);
                for (std::size_t k = 0; k < bin["abnormal"].get<std::size_t>(); ++k)
                    abnormal.push_back(mid);
            }
            if (normal.empty() && abnormal.empty())
                throw ParseError(path + ": detection report has no histogram content");
            std::vector<svg::HistSeries> hs;
            if (!normal.empty()) hs.push_back({"normal", "#4477aa", normal});
            if (!abnormal.empty()) hs.push_back({"abnormal", "#cc6677", abnormal});
            write_text((dir / (stem + "_scores.svg")).string(),
                       svg::histogram(hs, 20, "residual scores"));
            log << "rendered score chart from " << path << "\n";
        } else if (kind == "train_report") {
            std::vector<double> train_loss = j["train_loss"].get<std::vector<double>>();
            std::vector<double> val_loss = j["val_loss"].get<std::vector<double>>();
            write_text((dir / (stem + "_losses.svg")).string(),
                       svg::line_chart({{"train", "#4477aa", train_loss},
                                        {"val", "#cc6677", val_loss}},
                                       "loss per epoch"));
            log << "rendered loss chart from " << path << "\n";
        } else if (kind == "gates_report") {
            std::vector<double> ah = j["alpha_hist_values"].get<std::vector<double>>();
            std::vector<double> af = j["alpha_fut_values"].get<std::vector<double>>();
            write_text((dir / (stem + "_hist.svg")).string(),
                       svg::histogram({{"alpha_hist", "#4477aa", ah},
                                       {"alpha_fut", "#cc6677", af}},
                                      20, "gate coefficients"));
            log << "rendered gate histogram from " << path << "\n";
        } else {
            throw ParseError(path + ": unknown report kind '" + kind + "'");
        }
    }
    return 0;
}

}  // namespace aura::cli
