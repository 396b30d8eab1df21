#pragma once

// Residual-based anomaly detection: per-sequence scoring, threshold
// calibration to a false-alarm budget, and TAR/FAR reporting.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aura/data.hpp"
#include "aura/error.hpp"
#include "aura/model.hpp"
#include "aura/rng.hpp"
#include "aura/train.hpp"

namespace aura::detect {

enum class ScoreMetric { mse, mae };

inline ScoreMetric score_metric_from_string(const std::string& s) {
    if (s == "mse") return ScoreMetric::mse;
    if (s == "mae") return ScoreMetric::mae;
    throw ConfigError("unknown detect metric: " + s + " (expected mse or mae)");
}

struct ResidualScore {
    std::string sample_id;
    double score = 0.0;
    data::Label label = data::Label::unlabeled;
};

// Score = horizon-mean residual (squared by default) on the normalized scale.
// Exogenous inputs are ground-truth recorded values, never predictions.
inline std::vector<ResidualScore> score_residuals(const model::AuraModel& m,
                                                  const std::vector<data::SampleRecord>& samples,
                                                  const context::TextEmbedder& emb,
                                                  ScoreMetric metric = ScoreMetric::mse) {
    std::vector<ResidualScore> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        train::SampleMetrics sm = train::sample_metrics(m, s, emb);
        out.push_back({s.sample_id(),
                       metric == ScoreMetric::mse ? sm.mse_norm : sm.mae_norm, s.label});
    }
    return out;
}

struct Threshold {
    double value = 0.0;
    double target_far = 0.05;
    std::size_t n_normal_calibration = 0;
    std::string quantile_method = "nearest-rank-upper";
};

// Nearest-rank upper quantile: the k-th largest normal score with
// k = floor(target_far * n). Scores strictly above the threshold are flagged,
// so the empirical FAR on the calibration set is <= target_far by
// construction.
inline Threshold calibrate_threshold(std::vector<double> normal_scores, double target_far) {
    if (target_far <= 0.0 || target_far >= 1.0)
        throw ValueError("target_far must be in (0,1), got " + std::to_string(target_far));
    if (normal_scores.size() < 20)
        throw ValueError("calibrate_threshold needs at least 20 normal scores, got " +
                         std::to_string(normal_scores.size()));
    for (double s : normal_scores)
        if (!std::isfinite(s) || s < 0.0)
            throw ValueError("residual scores must be finite and nonnegative");

    std::sort(normal_scores.begin(), normal_scores.end(), std::greater<double>());
    std::size_t k = static_cast<std::size_t>(static_cast<double>(normal_scores.size()) *
                                             target_far);
    if (k < 1) k = 1;  // flag nothing rather than everything
    Threshold t;
    t.value = normal_scores[k - 1];
    t.target_far = target_far;
    t.n_normal_calibration = normal_scores.size();
    return t;
}

struct TarFar {
    std::optional<double> tar;  // absent when there are no abnormal scores
    double far = 0.0;
    std::vector<std::string> flagged_ids;
};

// Strict inequality at the threshold: ties are not flagged.
inline TarFar compute_tar_far(const std::vector<ResidualScore>& scores, double threshold) {
    TarFar r;
    std::size_t n_normal = 0, n_abnormal = 0, hit_normal = 0, hit_abnormal = 0;
    for (const auto& s : scores) {
        const bool flagged = s.score > threshold;
        if (s.label == data::Label::normal) {
            ++n_normal;
            hit_normal += flagged;
        } else if (s.label == data::Label::abnormal) {
            ++n_abnormal;
            hit_abnormal += flagged;
        }
        if (flagged) r.flagged_ids.push_back(s.sample_id);
    }
    if (n_normal > 0) r.far = static_cast<double>(hit_normal) / static_cast<double>(n_normal);
    if (n_abnormal > 0)
        r.tar = static_cast<double>(hit_abnormal) / static_cast<double>(n_abnormal);
    return r;
}

struct DetectOptions {
    double target_far = 0.05;
    // true: calibrate on a 50% split of normal test scores, report FAR on the
    // held-out half. false: the in-sample protocol (calibrate and report on
    // the same normal population).
    bool holdout = true;
    std::uint64_t seed = 0;
    ScoreMetric metric = ScoreMetric::mse;
};

struct HistogramBin {
    double lo = 0.0, hi = 0.0;
    std::size_t normal = 0, abnormal = 0;
};

struct DetectionReport {
    Threshold threshold;
    std::optional<double> tar;
    double far = 0.0;              // held-out (or in-sample) normals
    double far_calibration = 0.0;  // calibration normals
    std::size_t n_normal = 0, n_abnormal = 0, n_calibration = 0, n_holdout = 0;
    bool holdout_protocol = true;
    std::vector<ResidualScore> scores;
    std::vector<std::string> flagged_ids;
    std::vector<HistogramBin> histogram;
};

inline std::vector<HistogramBin> score_histogram(const std::vector<ResidualScore>& scores,
                                                 std::size_t bins = 20) {
    std::vector<HistogramBin> out(bins);
    double mx = 0.0;
    for (const auto& s : scores) mx = std::max(mx, s.score);
    if (mx <= 0.0) mx = 1.0;
    for (std::size_t b = 0; b < bins; ++b) {
        out[b].lo = mx * static_cast<double>(b) / static_cast<double>(bins);
        out[b].hi = mx * static_cast<double>(b + 1) / static_cast<double>(bins);
    }
    for (const auto& s : scores) {
        std::size_t b = static_cast<std::size_t>(s.score / mx * static_cast<double>(bins));
        if (b >= bins) b = bins - 1;
        if (s.label == data::Label::abnormal)
            ++out[b].abnormal;
        else if (s.label == data::Label::normal)
            ++out[b].normal;
    }
    return out;
}

// Full protocol: score -> calibrate on normal test scores -> TAR on abnormal,
// FAR on held-out normals.
inline DetectionReport detect(const model::AuraModel& m,
                              const std::vector<data::SampleRecord>& test_split,
                              const DetectOptions& opt, const context::TextEmbedder& emb) {
    DetectionReport rep;
    rep.holdout_protocol = opt.holdout;
    rep.scores = score_residuals(m, test_split, emb, opt.metric);

    std::vector<std::size_t> normal_idx;
    for (std::size_t i = 0; i < rep.scores.size(); ++i) {
        if (rep.scores[i].label == data::Label::normal) normal_idx.push_back(i);
        rep.n_normal += rep.scores[i].label == data::Label::normal;
        rep.n_abnormal += rep.scores[i].label == data::Label::abnormal;
    }
    if (normal_idx.empty()) throw ValueError("detect: test split has no normal records");

    std::vector<double> calibration_scores;
    std::vector<ResidualScore> holdout_scores;
    if (opt.holdout) {
        Rng rng(opt.seed);
        rng.shuffle(normal_idx);
        const std::size_t half = normal_idx.size() / 2;
        for (std::size_t i = 0; i < normal_idx.size(); ++i) {
            if (i < half)
                calibration_scores.push_back(rep.scores[normal_idx[i]].score);
            else
                holdout_scores.push_back(rep.scores[normal_idx[i]]);
        }
    } else {
        for (std::size_t i : normal_idx) {
            calibration_scores.push_back(rep.scores[i].score);
            holdout_scores.push_back(rep.scores[i]);
        }
    }
    rep.n_calibration = calibration_scores.size();
    rep.n_holdout = holdout_scores.size();

    rep.threshold = calibrate_threshold(calibration_scores, opt.target_far);

    std::size_t cal_hits = 0;
    for (double s : calibration_scores) cal_hits += s > rep.threshold.value;
    rep.far_calibration =
        static_cast<double>(cal_hits) / static_cast<double>(calibration_scores.size());

    // FAR from held-out normals, TAR from all abnormal scores
    std::vector<ResidualScore> rated = holdout_scores;
    for (const auto& s : rep.scores)
        if (s.label == data::Label::abnormal) rated.push_back(s);
    TarFar tf = compute_tar_far(rated, rep.threshold.value);
    rep.tar = tf.tar;
    rep.far = tf.far;

    // flag over the full split for the report
    TarFar all = compute_tar_far(rep.scores, rep.threshold.value);
    rep.flagged_ids = std::move(all.flagged_ids);
    rep.histogram = score_histogram(rep.scores);
    return rep;
}

}  // namespace aura::detect
