#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "aura/train.hpp"

using namespace aura;
using namespace aura::train;

namespace {

model::ModelConfig small_config() {
    model::ModelConfig c;
    c.patch_len = 2;
    c.d_model = 16;
    c.n_layers = 1;
    c.n_heads = 2;
    c.n_experts = 2;
    c.ffn_hidden = 32;
    c.endo_len = 6;
    c.horizon = 4;
    c.exo_dim = 2;
    c.exo_hist_len = 6;
    c.exo_fut_len = 4;
    c.text_embed_dim = 16;
    return c;
}

// Small exogenous-driven corpus: target is a clean function of future exo.
std::vector<data::SampleRecord> toy_samples(std::size_t n, std::uint64_t seed,
                                            double target_level = 0.0) {
    Rng rng(seed);
    std::vector<data::SampleRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        data::SampleRecord s;
        s.series_id = "toy" + std::to_string(i);
        s.t0 = 1700000000 + static_cast<std::int64_t>(i) * 3600;
        s.attr_text = "B-20 fleet variant alpha";
        s.geo = {20.0, 110.0, 10.0};
        s.ctx.timestamp_utc = s.t0;
        s.label = data::Label::normal;
        double level = rng.uniform(-1, 1);
        for (int t = 0; t < 6; ++t) {
            s.endo_hist.push_back(level + 0.2 * t + rng.uniform(-0.05, 0.05));
            s.exo_hist.push_back({rng.uniform(0, 1), rng.uniform(0, 1)});
        }
        for (int t = 0; t < 4; ++t) {
            double e1 = rng.uniform(0, 1), e2 = rng.uniform(0, 1);
            s.exo_fut.push_back({e1, e2});
            s.endo_target.push_back(target_level + level + 0.5 * e1 - 0.3 * e2 + 0.2 * t);
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

TEST_CASE("mse and mae fixed points") {
    CHECK(mse({1, 2, 3}, {1, 2, 3}) == 0.0);
    CHECK(mae({1, 2, 3}, {1, 2, 3}) == 0.0);
    CHECK(mse({1, -1}, {0, 0}) == 1.0);
    CHECK(mae({1, -1}, {0, 0}) == 1.0);
    CHECK(mse({3, 0, 0}, {0, 0, 0}) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(mae({3, 0, 0}, {0, 0, 0}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(mse({1, 2}, {1}), DimError);
}

TEST_CASE("adam: zero gradient is a parameter no-op, counter advances") {
    diff::ParamStore ps;
    ps.add("p", diff::Tensor::from({3}, {1, 2, 3}));
    AdamState st(ps);
    adam_step(ps, st, 0.1);
    CHECK(ps.at("p").values() == std::vector<double>{1, 2, 3});
    CHECK(st.step_count == 1);
}

TEST_CASE("adam: first step matches the bias-corrected closed form") {
    diff::ParamStore ps;
    ps.add("p", diff::Tensor::from({1}, {2.0}));
    ps.at("p").mutable_grad() = {0.4};
    AdamState st(ps);
    const double lr = 0.05;
    adam_step(ps, st, lr);
    // mhat = g, vhat = g^2 on step one
    const double expect = 2.0 - lr * 0.4 / (std::sqrt(0.4 * 0.4) + 1e-8);
    CHECK(ps.at("p").values()[0] == doctest::Approx(expect).epsilon(1e-15));
    // gradients zeroed after the step
    CHECK(ps.at("p").grad() == std::vector<double>{0.0});
}

TEST_CASE("adam: two steps with constant gradient match the hand unroll") {
    diff::ParamStore ps;
    ps.add("p", diff::Tensor::from({1}, {1.0}));
    AdamState st(ps);
    const double g = -0.7, lr = 0.01;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;

    double m = 0, v = 0, p = 1.0;
    for (int step = 1; step <= 2; ++step) {
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mhat = m / (1 - std::pow(b1, step));
        const double vhat = v / (1 - std::pow(b2, step));
        p -= lr * mhat / (std::sqrt(vhat) + eps);
    }

    ps.at("p").mutable_grad() = {g};
    adam_step(ps, st, lr);
    ps.at("p").mutable_grad() = {g};
    adam_step(ps, st, lr);
    CHECK(ps.at("p").values()[0] == doctest::Approx(p).epsilon(1e-14));
}

TEST_CASE("adam aborts on non-finite gradients, naming the parameter") {
    diff::ParamStore ps;
    ps.add("w.bad", diff::Tensor::from({2}, {1, 2}));
    ps.at("w.bad").mutable_grad() = {0.0, std::nan("")};
    AdamState st(ps);
    try {
        adam_step(ps, st, 0.1);
        FAIL("expected TrainError");
    } catch (const TrainError& e) {
        CHECK(std::string(e.what()).find("w.bad") != std::string::npos);
    }
}

TEST_CASE("early stopping bookkeeping") {
    // patience 1, strictly increasing after epoch 1 -> stop after epoch 2
    CHECK_FALSE(should_stop({0.5}, 1));
    CHECK(should_stop({0.5, 0.6}, 1));
    CHECK(best_epoch({0.5, 0.6}) == 1);
    // plateau counts as no improvement
    CHECK(should_stop({0.5, 0.5}, 1));
    // patience 2
    CHECK_FALSE(should_stop({0.5, 0.6}, 2));
    CHECK(should_stop({0.5, 0.6, 0.7}, 2));
    CHECK(best_epoch({0.3, 0.2, 0.4, 0.1}) == 4);
}

TEST_CASE("train_loop: patience-1 stop on a monotonically worsening val set") {
    model::ModelConfig mc = small_config();
    model::AuraModel m(mc, 5);
    context::HashingEmbedder emb(mc.text_embed_dim);

    // val targets sit far from train targets, so fitting train strictly hurts val
    auto train_set = toy_samples(4, 11, 5.0);
    auto val_set = toy_samples(4, 13, -5.0);

    TrainConfig tc;
    tc.learning_rate = 0.02;
    tc.max_epochs = 10;
    tc.patience = 1;
    tc.batch_size = 4;
    tc.seed = 3;
    TrainReport rep = train_loop(m, train_set, val_set, tc, emb);
    CHECK(rep.stop_epoch == 2);
    CHECK(rep.best_epoch == 1);
    REQUIRE(rep.val_loss.size() == 2);
    CHECK(rep.val_loss[1] > rep.val_loss[0]);

    // restored weights reproduce the best observed val loss
    double val = 0.0;
    for (const auto& s : val_set) val += sample_metrics(m, s, emb).mse_norm;
    val /= static_cast<double>(val_set.size());
    CHECK(val == doctest::Approx(rep.val_loss[0]).epsilon(1e-12));
}

TEST_CASE("train_loop: same seed reproduces the loss trajectory within 1e-12") {
    model::ModelConfig mc = small_config();
    context::HashingEmbedder emb(mc.text_embed_dim);
    auto train_set = toy_samples(12, 21);
    auto val_set = toy_samples(4, 22);
    TrainConfig tc;
    tc.learning_rate = 0.01;
    tc.max_epochs = 4;
    tc.patience = 10;
    tc.batch_size = 4;
    tc.seed = 7;

    model::AuraModel m1(mc, 9);
    TrainReport r1 = train_loop(m1, train_set, val_set, tc, emb);
    model::AuraModel m2(mc, 9);
    TrainReport r2 = train_loop(m2, train_set, val_set, tc, emb);

    REQUIRE(r1.train_loss.size() == r2.train_loss.size());
    for (std::size_t i = 0; i < r1.train_loss.size(); ++i) {
        CHECK(std::fabs(r1.train_loss[i] - r2.train_loss[i]) <= 1e-12);
        CHECK(std::fabs(r1.val_loss[i] - r2.val_loss[i]) <= 1e-12);
    }
}

TEST_CASE("train_loop: memorization of 8 samples within 500 steps") {
    model::ModelConfig mc = small_config();
    mc.d_model = 32;
    mc.ffn_hidden = 64;
    model::AuraModel m(mc, 800);
    context::HashingEmbedder emb(mc.text_embed_dim);
    auto train_set = toy_samples(8, 31);

    TrainConfig tc;
    tc.learning_rate = 0.01;
    tc.max_epochs = 500;  // batch = full set, one step per epoch
    tc.patience = 500;
    tc.batch_size = 8;
    tc.seed = 1;
    TrainReport rep = train_loop(m, train_set, train_set, tc, emb);
    CHECK(rep.train_loss.back() < 1e-3);
}

TEST_CASE("train_loop: loss trajectory is invariant to raw endogenous scale") {
    model::ModelConfig mc = small_config();
    context::HashingEmbedder emb(mc.text_embed_dim);
    auto train_set = toy_samples(8, 41);
    auto val_set = toy_samples(4, 42);

    auto scaled = [&](double c) {
        auto t2 = train_set;
        auto v2 = val_set;
        for (auto* split : {&t2, &v2})
            for (auto& s : *split) {
                for (double& x : s.endo_hist) x *= c;
                for (double& x : s.endo_target) x *= c;
            }
        return std::make_pair(t2, v2);
    };

    TrainConfig tc;
    tc.learning_rate = 0.01;
    tc.max_epochs = 3;
    tc.patience = 10;
    tc.batch_size = 4;
    tc.seed = 5;

    model::AuraModel m1(mc, 9);
    TrainReport r1 = train_loop(m1, train_set, val_set, tc, emb);
    auto [t2, v2] = scaled(37.5);
    model::AuraModel m2(mc, 9);
    TrainReport r2 = train_loop(m2, t2, v2, tc, emb);

    for (std::size_t i = 0; i < r1.train_loss.size(); ++i) {
        CHECK(r1.train_loss[i] == doctest::Approx(r2.train_loss[i]).epsilon(1e-9));
        CHECK(r1.val_loss[i] == doctest::Approx(r2.val_loss[i]).epsilon(1e-9));
    }
}

TEST_CASE("train_loop rejects empty splits and bad config") {
    model::ModelConfig mc = small_config();
    model::AuraModel m(mc, 1);
    context::HashingEmbedder emb(mc.text_embed_dim);
    auto samples = toy_samples(2, 51);
    TrainConfig tc;
    CHECK_THROWS_AS(train_loop(m, {}, samples, tc, emb), ConfigError);
    CHECK_THROWS_AS(train_loop(m, samples, {}, tc, emb), ConfigError);
    tc.learning_rate = -1;
    CHECK_THROWS_AS(tc.validate(), ConfigError);
}

TEST_CASE("evaluate: aggregation equals mean of per-sample metrics") {
    model::ModelConfig mc = small_config();
    model::AuraModel m(mc, 61);
    context::HashingEmbedder emb(mc.text_embed_dim);
    auto samples = toy_samples(3, 71);

    EvalResult agg = evaluate(m, samples, emb);
    CHECK(agg.n == 3);
    double acc_mse = 0.0, acc_mae = 0.0;
    for (const auto& s : samples) {
        SampleMetrics sm = sample_metrics(m, s, emb);
        acc_mse += sm.mse_norm;
        acc_mae += sm.mae_norm;
    }
    CHECK(agg.mse == doctest::Approx(acc_mse / 3).epsilon(1e-12));
    CHECK(agg.mae == doctest::Approx(acc_mae / 3).epsilon(1e-12));

    // flat concatenated-residual cross-check (equal because S is constant)
    double flat_acc = 0.0;
    std::size_t count = 0;
    for (const auto& s : samples) {
        model::ForwardResult r = m.forward(s, emb);
        data::NormalizationStats st;
        data::SampleRecord ns = data::normalize(s, m.exo_stats(), st);
        for (std::size_t i = 0; i < ns.endo_target.size(); ++i) {
            const double d = r.forecast_norm.at(i) - ns.endo_target[i];
            flat_acc += d * d;
            ++count;
        }
    }
    CHECK(agg.mse == doctest::Approx(flat_acc / static_cast<double>(count)).epsilon(1e-12));

    CHECK_THROWS_AS(evaluate(m, {}, emb), ConfigError);

    // single-sample split equals that sample's metrics
    EvalResult one = evaluate(m, {samples[0]}, emb);
    SampleMetrics sm0 = sample_metrics(m, samples[0], emb);
    CHECK(one.mse == doctest::Approx(sm0.mse_norm).epsilon(1e-15));
    CHECK(one.mae == doctest::Approx(sm0.mae_norm).epsilon(1e-15));
}
