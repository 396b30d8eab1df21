#pragma once

// Loss, metrics, Adam, and the training loop with early stopping.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "aura/data.hpp"
#include "aura/error.hpp"
#include "aura/model.hpp"

namespace aura::train {

struct TrainConfig {
    double learning_rate = 5e-4;
    std::size_t max_epochs = 100;
    std::size_t patience = 5;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    model::AblationFlags ablation;

    void validate() const {
        if (learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
        if (patience < 1) throw ConfigError("patience must be >= 1");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
        ablation.validate();
    }
};

inline double mse(const std::vector<double>& pred, const std::vector<double>& target) {
    if (pred.size() != target.size())
        throw DimError("mse: length mismatch " + std::to_string(pred.size()) + " vs " +
                       std::to_string(target.size()));
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.size());
}

inline double mae(const std::vector<double>& pred, const std::vector<double>& target) {
    if (pred.size() != target.size())
        throw DimError("mae: length mismatch " + std::to_string(pred.size()) + " vs " +
                       std::to_string(target.size()));
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += std::fabs(pred[i] - target[i]);
    return acc / static_cast<double>(pred.size());
}

// ---------------------------------------------------------------------------
// Adam with bias correction. Gradients are zeroed after each step.
// ---------------------------------------------------------------------------

struct AdamState {
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::size_t step_count = 0;
    std::vector<std::vector<double>> m, v;

    explicit AdamState(const diff::ParamStore& params) {
        m.reserve(params.size());
        v.reserve(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            m.emplace_back(params[i].size(), 0.0);
            v.emplace_back(params[i].size(), 0.0);
        }
    }
};

inline void adam_step(diff::ParamStore& params, AdamState& st, double lr) {
    if (st.m.size() != params.size()) throw TrainError("adam state does not match parameter set");
    for (std::size_t i = 0; i < params.size(); ++i)
        for (double g : params[i].grad())
            if (!std::isfinite(g))
                throw TrainError("non-finite gradient in parameter '" + params[i].name() + "'");

    ++st.step_count;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step_count));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& vals = params[i].values();
        const auto& grad = params[i].grad();
        auto& mi = st.m[i];
        auto& vi = st.v[i];
        for (std::size_t j = 0; j < vals.size(); ++j) {
            const double g = grad[j];
            mi[j] = st.beta1 * mi[j] + (1.0 - st.beta1) * g;
            vi[j] = st.beta2 * vi[j] + (1.0 - st.beta2) * g * g;
            const double mhat = mi[j] / bc1;
            const double vhat = vi[j] / bc2;
            vals[j] -= lr * mhat / (std::sqrt(vhat) + st.eps);
        }
        params[i].zero_grad();
    }
}

// ---------------------------------------------------------------------------
// Early-stopping bookkeeping (1-based epochs).
// ---------------------------------------------------------------------------

inline std::size_t best_epoch(const std::vector<double>& val_losses) {
    std::size_t best = 1;
    for (std::size_t e = 1; e < val_losses.size(); ++e)
        if (val_losses[e] < val_losses[best - 1]) best = e + 1;
    return best;
}

inline bool should_stop(const std::vector<double>& val_losses, std::size_t patience) {
    if (val_losses.empty()) return false;
    return val_losses.size() - best_epoch(val_losses) >= patience;
}

// ---------------------------------------------------------------------------
// Evaluation (normalized-scale metrics, plus raw-scale for reporting).
// ---------------------------------------------------------------------------

struct SampleMetrics {
    double mse_norm, mae_norm, mse_raw, mae_raw;
};

inline SampleMetrics sample_metrics(const model::AuraModel& m, const data::SampleRecord& s,
                                    const context::TextEmbedder& emb) {
    model::ForwardResult r = m.forward(s, emb);
    data::NormalizationStats st;
    data::SampleRecord ns = data::normalize(s, m.exo_stats(), st);
    const std::vector<double> pred_norm(r.forecast_norm.data().begin(),
                                        r.forecast_norm.data().end());
    return {mse(pred_norm, ns.endo_target), mae(pred_norm, ns.endo_target),
            mse(r.forecast, s.endo_target), mae(r.forecast, s.endo_target)};
}

struct EvalResult {
    double mse = 0.0, mae = 0.0;          // normalized scale
    double mse_raw = 0.0, mae_raw = 0.0;  // raw scale
    std::size_t n = 0;
};

inline EvalResult evaluate(const model::AuraModel& m, const std::vector<data::SampleRecord>& split,
                           const context::TextEmbedder& emb) {
    if (split.empty()) throw ConfigError("evaluate: empty split");
    EvalResult r;
    for (const auto& s : split) {
        SampleMetrics sm = sample_metrics(m, s, emb);
        r.mse += sm.mse_norm;
        r.mae += sm.mae_norm;
        r.mse_raw += sm.mse_raw;
        r.mae_raw += sm.mae_raw;
    }
    const double inv = 1.0 / static_cast<double>(split.size());
    r.mse *= inv;
    r.mae *= inv;
    r.mse_raw *= inv;
    r.mae_raw *= inv;
    r.n = split.size();
    return r;
}

// ---------------------------------------------------------------------------
// Training loop. Minimizes MSE on normalized targets; early-stops when the
// validation loss fails to improve for `patience` epochs and restores the
// best-validation parameters. Single-threaded and deterministic given seed.
// ---------------------------------------------------------------------------

struct TrainReport {
    std::vector<double> train_loss, val_loss;  // per epoch
    std::size_t best_epoch = 0, stop_epoch = 0;
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;
    std::size_t n_train = 0, n_val = 0;
};

inline TrainReport train_loop(model::AuraModel& m, const std::vector<data::SampleRecord>& train,
                              const std::vector<data::SampleRecord>& val, const TrainConfig& cfg,
                              const context::TextEmbedder& emb) {
    cfg.validate();
    if (train.empty() || val.empty())
        throw ConfigError("train_loop: train and validation splits must be nonempty");

    const auto t_start = std::chrono::steady_clock::now();
    m.set_exo_stats(data::compute_exo_stats(train, m.config().exo_dim));

    AdamState adam(m.params());
    Rng shuffle_rng(cfg.seed);
    TrainReport report;
    report.seed = cfg.seed;
    report.n_train = train.size();
    report.n_val = val.size();

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<std::vector<double>> best_snapshot = m.params().snapshot_values();
    double best_val = std::numeric_limits<double>::infinity();

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            diff::Tensor batch_loss;
            for (std::size_t k = start; k < end; ++k) {
                const data::SampleRecord& s = train[order[k]];
                model::ForwardResult r = m.forward(s, emb);
                data::NormalizationStats st;
                data::SampleRecord ns = data::normalize(s, m.exo_stats(), st);
                diff::Tensor target = diff::Tensor::from({1, ns.endo_target.size()},
                                                         ns.endo_target);
                diff::Tensor loss = diff::mse_loss(r.forecast_norm, target);
                batch_loss = batch_loss.defined() ? diff::add(batch_loss, loss) : loss;
            }
            batch_loss = diff::mul_scalar(batch_loss, 1.0 / static_cast<double>(end - start));
            epoch_loss += batch_loss.scalar_value() * static_cast<double>(end - start);
            diff::backward(batch_loss);
            adam_step(m.params(), adam, cfg.learning_rate);
        }
        report.train_loss.push_back(epoch_loss / static_cast<double>(train.size()));

        double val_loss = 0.0;
        for (const auto& s : val) val_loss += sample_metrics(m, s, emb).mse_norm;
        val_loss /= static_cast<double>(val.size());
        report.val_loss.push_back(val_loss);

        if (val_loss < best_val) {
            best_val = val_loss;
            best_snapshot = m.params().snapshot_values();
        }
        report.stop_epoch = epoch;
        if (should_stop(report.val_loss, cfg.patience)) break;
    }

    report.best_epoch = best_epoch(report.val_loss);
    m.params().restore_values(best_snapshot);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return report;
}

}  // namespace aura::train
