#pragma once

// The Aura architecture: patch embedding, meta-token assembly, self-attention
// with two-stage gated exogenous cross-attention, a text-gated
// mixture-of-experts, and an affine forecast head. Also the checkpoint format.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "aura/context.hpp"
#include "aura/data.hpp"
#include "aura/error.hpp"
#include "aura/grad.hpp"
#include "aura/ops.hpp"

namespace aura::model {

using diff::Tensor;

// ---------------------------------------------------------------------------
// Configuration.
// ---------------------------------------------------------------------------

struct AblationFlags {
    bool no_static = false;
    bool no_events = false;
    bool no_exog = false;
    bool uniform_concat = false;     // everything as extra input tokens
    bool uniform_crossattn = false;  // everything as cross-attention key/values
    bool uniform_moe = false;        // everything pooled into the MoE gate
    bool no_gated_residual = false;  // cross-attention residual without alpha

    void validate() const {
        const int uniforms = uniform_concat + uniform_crossattn + uniform_moe;
        if (uniforms > 1)
            throw ConfigError("at most one uniform_* ablation flag may be set");
        if (uniforms == 1 && (no_static || no_events || no_exog || no_gated_residual))
            throw ConfigError("uniform_* ablation flags cannot combine with no_* flags");
    }

    bool any_uniform() const { return uniform_concat || uniform_crossattn || uniform_moe; }

    std::string to_string() const {
        std::string s;
        auto app = [&](bool f, const char* name) {
            if (f) s += (s.empty() ? "" : ",") + std::string(name);
        };
        app(no_static, "no_static");
        app(no_events, "no_events");
        app(no_exog, "no_exog");
        app(uniform_concat, "uniform_concat");
        app(uniform_crossattn, "uniform_crossattn");
        app(uniform_moe, "uniform_moe");
        app(no_gated_residual, "no_gated_residual");
        return s;
    }

    static AblationFlags parse(const std::string& csv) {
        AblationFlags f;
        std::stringstream ss(csv);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok.empty()) continue;
            if (tok == "no_static") f.no_static = true;
            else if (tok == "no_events") f.no_events = true;
            else if (tok == "no_exog") f.no_exog = true;
            else if (tok == "uniform_concat") f.uniform_concat = true;
            else if (tok == "uniform_crossattn") f.uniform_crossattn = true;
            else if (tok == "uniform_moe") f.uniform_moe = true;
            else if (tok == "no_gated_residual") f.no_gated_residual = true;
            else throw ConfigError("unknown ablation flag: " + tok);
        }
        f.validate();
        return f;
    }
};

struct ModelConfig {
    std::size_t patch_len = 6;
    std::size_t d_model = 128;
    std::size_t n_layers = 1;
    std::size_t n_heads = 4;
    std::size_t n_experts = 4;
    std::size_t moe_top_k = 0;  // 0 -> dense (= n_experts)
    std::size_t ffn_hidden = 0; // 0 -> 2 * d_model
    std::size_t endo_len = 6;
    std::size_t horizon = 18;
    std::size_t exo_dim = 2;
    std::size_t exo_hist_len = 6;
    std::size_t exo_fut_len = 18;
    std::size_t text_embed_dim = 256;
    AblationFlags ablation;
    context::DiscretizationRules ctx_rules;
    std::string prompt_template = "default";

    std::size_t top_k() const { return moe_top_k == 0 ? n_experts : moe_top_k; }
    std::size_t ffn_width() const { return ffn_hidden == 0 ? 2 * d_model : ffn_hidden; }
    std::size_t n_endo_patches() const { return (endo_len + patch_len - 1) / patch_len; }
    std::size_t n_exo_hist_patches() const {
        return exo_hist_len == 0 ? 0 : (exo_hist_len + patch_len - 1) / patch_len;
    }
    std::size_t n_exo_fut_patches() const {
        return exo_fut_len == 0 ? 0 : (exo_fut_len + patch_len - 1) / patch_len;
    }

    bool use_static() const { return !ablation.no_static; }
    bool meta_tokens_in_sequence() const { return use_static() && !ablation.any_uniform(); }
    bool use_exo() const { return exo_dim > 0 && !ablation.no_exog; }
    bool use_cross_attention() const {
        return (use_exo() || ablation.uniform_crossattn) && !ablation.uniform_concat &&
               !ablation.uniform_moe;
    }
    bool use_moe() const {
        return !ablation.no_events && !ablation.uniform_concat && !ablation.uniform_crossattn;
    }
    bool gated_residual() const { return !ablation.no_gated_residual; }
    // text token appended/attached for the uniform variants that move the text
    // path out of the MoE gate
    bool use_text_token() const { return ablation.uniform_concat || ablation.uniform_crossattn; }

    std::size_t moe_gate_dim() const {
        // text plus pooled static, historical-exo and future-exo embeddings
        return ablation.uniform_moe ? text_embed_dim + 3 * d_model : text_embed_dim;
    }

    void validate() const {
        ablation.validate();
        if (patch_len == 0 || d_model == 0 || n_layers == 0 || n_heads == 0 || endo_len == 0 ||
            horizon == 0 || text_embed_dim == 0)
            throw ConfigError("model dimensions must be positive");
        if (d_model % n_heads != 0)
            throw ConfigError("d_model (" + std::to_string(d_model) +
                              ") must be divisible by n_heads (" + std::to_string(n_heads) + ")");
        if (n_experts == 0) throw ConfigError("n_experts must be >= 1");
        if (moe_top_k > n_experts)
            throw ConfigError("moe_top_k (" + std::to_string(moe_top_k) + ") must be in [1, " +
                              std::to_string(n_experts) + "]");
        if (exo_hist_len != 0 && exo_hist_len != endo_len)
            throw ConfigError("exo_hist_len must be 0 or endo_len");
        if (exo_fut_len != 0 && exo_fut_len != horizon)
            throw ConfigError("exo_fut_len must be 0 or horizon");
        if (exo_dim == 0 && (exo_hist_len != 0 || exo_fut_len != 0))
            throw ConfigError("exogenous lengths set but exo_dim is 0");
    }
};

// Per-sample, per-layer gate observations.
struct GateTrace {
    std::size_t layer = 0;
    std::optional<double> alpha_hist;
    std::optional<double> alpha_fut;
    std::vector<double> moe_weights;
};

// ---------------------------------------------------------------------------
// Patchify (series -> list of zero-padded patches).
// ---------------------------------------------------------------------------

inline std::vector<std::vector<double>> patchify(const std::vector<double>& x, std::size_t P) {
    if (x.empty() || P == 0) throw ValueError("patchify: T >= 1 and P >= 1 required");
    const std::size_t N = (x.size() + P - 1) / P;
    std::vector<std::vector<double>> patches(N, std::vector<double>(P, 0.0));
    for (std::size_t i = 0; i < x.size(); ++i) patches[i / P][i % P] = x[i];
    return patches;
}

// Same content as a constant [NxP] tensor, which is what the projector eats.
inline Tensor patch_matrix(const std::vector<double>& x, std::size_t P) {
    const auto patches = patchify(x, P);
    std::vector<double> v;
    v.reserve(patches.size() * P);
    for (const auto& p : patches) v.insert(v.end(), p.begin(), p.end());
    return Tensor::from({patches.size(), P}, std::move(v));
}

// h_i = W s_i + PE(i), one row per patch. W is the shared [DxP] projector.
inline Tensor patch_embed(const Tensor& patches, const Tensor& W, const Tensor& pe) {
    if (patches.cols() != W.cols())
        throw DimError("patch_embed: patch length " + std::to_string(patches.cols()) +
                       " does not match projector " + diff::shape_str(W.shape()));
    if (pe.rows() < patches.rows() || pe.cols() != W.rows())
        throw DimError("patch_embed: positional table " + diff::shape_str(pe.shape()) +
                       " too small for " + std::to_string(patches.rows()) + " patches of width " +
                       std::to_string(W.rows()));
    Tensor tokens = diff::matmul(patches, diff::transpose(W));
    Tensor pe_rows = pe.rows() == patches.rows() ? pe : diff::slice_rows(pe, 0, patches.rows());
    return diff::add(tokens, pe_rows);
}

// ---------------------------------------------------------------------------
// Attention building blocks.
// ---------------------------------------------------------------------------

struct AttnParams {
    Tensor Wq, bq, Wk, bk, Wv, bv, Wo, bo;  // W: [DxD], b: [1xD]
};

struct LnParams {
    Tensor gamma, beta;  // [1xD]
};

struct MhaResult {
    Tensor out;                       // [M_q x D]
    std::vector<Tensor> head_weights; // post-softmax, each [M_q x M_kv]
};

inline MhaResult multi_head_attention(const Tensor& q_src, const Tensor& kv_src,
                                      const AttnParams& p, std::size_t n_heads,
                                      const std::optional<Tensor>& mask = std::nullopt) {
    const std::size_t D = q_src.cols();
    if (kv_src.cols() != D)
        throw DimError("attention: query width " + std::to_string(D) +
                       " vs key/value width " + std::to_string(kv_src.cols()));
    if (mask && (mask->rows() != q_src.rows() || mask->cols() != kv_src.rows()))
        throw DimError("attention: mask shape " + diff::shape_str(mask->shape()) +
                       " does not match " + std::to_string(q_src.rows()) + "x" +
                       std::to_string(kv_src.rows()));
    const std::size_t d = D / n_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));

    Tensor Q = diff::add(diff::matmul(q_src, p.Wq), p.bq);
    Tensor K = diff::add(diff::matmul(kv_src, p.Wk), p.bk);
    Tensor V = diff::add(diff::matmul(kv_src, p.Wv), p.bv);

    MhaResult res;
    std::vector<Tensor> heads;
    heads.reserve(n_heads);
    for (std::size_t h = 0; h < n_heads; ++h) {
        Tensor Qh = diff::slice_cols(Q, h * d, (h + 1) * d);
        Tensor Kh = diff::slice_cols(K, h * d, (h + 1) * d);
        Tensor Vh = diff::slice_cols(V, h * d, (h + 1) * d);
        Tensor scores = diff::matmul(Qh, diff::transpose(Kh));
        if (mask) scores = diff::masked_fill(scores, *mask, -1e9);
        Tensor weights = diff::softmax(diff::mul_scalar(scores, scale));
        res.head_weights.push_back(weights);
        heads.push_back(diff::matmul(weights, Vh));
    }
    Tensor merged = n_heads == 1 ? heads[0] : diff::concat_cols(heads);
    res.out = diff::add(diff::matmul(merged, p.Wo), p.bo);
    return res;
}

struct SelfAttnOut {
    Tensor out;
    std::vector<Tensor> weights;
};

// Post-norm residual block: LN(H + MHA(H)).
inline SelfAttnOut self_attention_block(const Tensor& H, const AttnParams& p, const LnParams& ln,
                                        std::size_t n_heads,
                                        const std::optional<Tensor>& mask = std::nullopt) {
    MhaResult a = multi_head_attention(H, H, p, n_heads, mask);
    return {diff::layer_norm(diff::add(H, a.out), ln.gamma, ln.beta), std::move(a.head_weights)};
}

struct GateParams {
    Tensor u;  // [Dx1]
    Tensor c;  // [1x1]
};

struct CrossAttnOut {
    Tensor out;
    std::optional<double> alpha;
};

// LN(H + alpha * CrossAttn(H, exo)), alpha = sigmoid(u . meanpool(H) + c).
// The test override substitutes a constant for alpha and skips the gate
// computation entirely. With `gated` false the sample-wise gate is removed
// and the branch contributes at full, fixed strength (alpha identically 1).
inline CrossAttnOut cross_attention_gated(const Tensor& H, const Tensor& exo_tokens,
                                          const AttnParams& p, const GateParams& gate,
                                          const LnParams& ln, std::size_t n_heads, bool gated,
                                          const std::optional<double>& alpha_override) {
    MhaResult a = multi_head_attention(H, exo_tokens, p, n_heads);
    Tensor contribution;
    std::optional<double> alpha;
    if (alpha_override) {
        alpha = *alpha_override;
        contribution = diff::mul(a.out, Tensor::scalar(*alpha_override));
    } else if (gated) {
        Tensor alpha_t = diff::sigmoid(diff::add(diff::matmul(diff::mean_rows(H), gate.u), gate.c));
        alpha = alpha_t.scalar_value();
        contribution = diff::mul(a.out, alpha_t);
    } else {
        alpha = 1.0;
        contribution = a.out;
    }
    return {diff::layer_norm(diff::add(H, contribution), ln.gamma, ln.beta), alpha};
}

struct ExpertParams {
    Tensor W1, b1, W2, b2;  // [DxF], [1xF], [FxD], [1xD]
};

struct MoeParams {
    Tensor gate_W;  // [KxE]
    Tensor gate_b;  // [1xK]
    std::vector<ExpertParams> experts;
};

struct MoeOut {
    Tensor out;
    std::vector<double> weights;
};

inline Tensor ffn_forward(const Tensor& H, const ExpertParams& e) {
    return diff::add(diff::matmul(diff::gelu(diff::add(diff::matmul(H, e.W1), e.b1)), e.W2), e.b2);
}

// LN(H + sum_i w_i FFN_i(H)); w = softmax(gate_W . gate_in + gate_b) with
// optional top-k truncation, renormalized via a masked softmax (equivalent to
// renormalizing the surviving weights and exactly zeroing the rest). The
// weights are shared across all tokens.
inline MoeOut moe_block(const Tensor& H, const Tensor& gate_in, const MoeParams& p,
                        const LnParams& ln, std::size_t top_k,
                        const std::optional<std::vector<double>>& weight_override) {
    const std::size_t K = p.experts.size();
    if (gate_in.size() != p.gate_W.cols())
        throw DimError("moe_block: gate input width " + std::to_string(gate_in.size()) +
                       " does not match gate " + diff::shape_str(p.gate_W.shape()));
    Tensor w;
    if (weight_override) {
        if (weight_override->size() != K)
            throw DimError("moe_block: weight override size mismatch");
        w = Tensor::from({1, K}, *weight_override);
    } else {
        Tensor logits = diff::add(diff::matmul(gate_in, diff::transpose(p.gate_W)), p.gate_b);
        if (top_k < K) {
            // stable top-k by value, lowest index on ties
            std::vector<std::size_t> idx(K);
            for (std::size_t i = 0; i < K; ++i) idx[i] = i;
            std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
                return logits.at(a) > logits.at(b);
            });
            std::vector<double> mask(K, 1.0);
            for (std::size_t i = 0; i < top_k; ++i) mask[idx[i]] = 0.0;
            logits = diff::masked_fill(logits, Tensor::from({1, K}, std::move(mask)), -1e9);
        }
        w = diff::softmax(logits);
    }

    Tensor mix;
    for (std::size_t i = 0; i < K; ++i) {
        if (w.at(i) == 0.0 && !w.requires_grad()) continue;  // pruned expert
        Tensor scaled = diff::mul(ffn_forward(H, p.experts[i]), diff::slice_cols(w, i, i + 1));
        mix = mix.defined() ? diff::add(mix, scaled) : scaled;
    }
    if (!mix.defined()) mix = Tensor::zeros({H.rows(), H.cols()});
    return {diff::layer_norm(diff::add(H, mix), ln.gamma, ln.beta),
            {w.data().begin(), w.data().end()}};
}

// ---------------------------------------------------------------------------
// The model.
// ---------------------------------------------------------------------------

struct ForwardResult {
    Tensor forecast_norm;           // [1 x S], lives in the recorded graph
    std::vector<double> forecast;   // de-normalized values
    data::NormalizationStats stats; // window stats used
    std::vector<GateTrace> traces;  // one per layer
};

class AuraModel {
public:
    AuraModel(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
        cfg_.validate();
        Rng rng(seed);
        init_params(rng);
        exo_stats_.mean.assign(cfg_.exo_dim, 0.0);
        exo_stats_.std.assign(cfg_.exo_dim, 1.0);
    }

    const ModelConfig& config() const { return cfg_; }
    diff::ParamStore& params() { return params_; }
    const diff::ParamStore& params() const { return params_; }

    void set_exo_stats(data::ExoStats st) {
        if (st.mean.size() != cfg_.exo_dim || st.std.size() != cfg_.exo_dim)
            throw DimError("exo stats width does not match exo_dim");
        exo_stats_ = std::move(st);
    }
    const data::ExoStats& exo_stats() const { return exo_stats_; }

    // Test override hooks; never set during training.
    std::optional<double> alpha_override_hist;
    std::optional<double> alpha_override_fut;
    std::optional<std::vector<double>> moe_weight_override;

    // Static-attribute embedding: z_a from the text embedder, z_g from the
    // scaled geo 3-vector. Exposed for tests.
    std::pair<Tensor, Tensor> embed_static(const std::string& attr_text,
                                           const std::array<double, 3>& geo,
                                           const context::TextEmbedder& embedder) const {
        for (double g : geo)
            if (!std::isfinite(g)) throw ValueError("embed_static: non-finite geo component");
        const auto emb = embed_cached(embedder, attr_text);
        if (emb.size() != cfg_.text_embed_dim)
            throw DimError("attr embedding width " + std::to_string(emb.size()) +
                           " does not match text_embed_dim " +
                           std::to_string(cfg_.text_embed_dim));
        Tensor attr_vec = Tensor::from({1, cfg_.text_embed_dim}, emb);
        Tensor z_a = diff::add(diff::matmul(attr_vec, diff::transpose(p("static.attr.W"))),
                               p("static.attr.b"));
        // lat/lon/alt scaled to order one
        Tensor geo_vec = Tensor::from({1, 3}, {geo[0] / 90.0, geo[1] / 180.0, geo[2] / 10000.0});
        Tensor z_g = diff::add(diff::matmul(geo_vec, diff::transpose(p("static.geo.W"))),
                               p("static.geo.b"));
        return {z_a, z_g};
    }

    // Fixed order: temporal tokens, then z_a, then z_g.
    static Tensor assemble_endo_tokens(const Tensor& h_endo, const Tensor& z_a, const Tensor& z_g) {
        return diff::concat_rows({h_endo, z_a, z_g});
    }

    ForwardResult forward(const data::SampleRecord& sample,
                          const context::TextEmbedder& embedder) const {
        check_sample(sample);
        ForwardResult res;
        data::SampleRecord ns = data::normalize(sample, exo_stats_, res.stats);

        const std::size_t N = cfg_.n_endo_patches();
        Tensor h_endo = patch_embed(patch_matrix(ns.endo_hist, cfg_.patch_len), p("patch.W"),
                                    p("pos.endo"));

        Tensor z_a, z_g;
        if (cfg_.use_static()) {
            auto [a, g] = embed_static(sample.attr_text, sample.geo, embedder);
            z_a = a;
            z_g = g;
        }

        Tensor exo_hist_tokens, exo_fut_tokens;
        if (cfg_.use_exo()) {
            exo_hist_tokens = embed_exo_block(ns.exo_hist, cfg_.n_exo_hist_patches());
            exo_fut_tokens = embed_exo_block(ns.exo_fut, cfg_.n_exo_fut_patches());
        }

        const std::string prompt =
            context::build_prompt(context::discretize_context(sample.ctx, cfg_.ctx_rules),
                                  cfg_.prompt_template);
        const auto text_raw = embed_cached(embedder, prompt);
        if (text_raw.size() != cfg_.text_embed_dim)
            throw DimError("context embedding width " + std::to_string(text_raw.size()) +
                           " does not match text_embed_dim");
        Tensor text_vec = Tensor::from({1, cfg_.text_embed_dim}, text_raw);

        Tensor z_text;
        if (cfg_.use_text_token())
            z_text = diff::add(diff::matmul(text_vec, diff::transpose(p("text.proj.W"))),
                               p("text.proj.b"));

        // assemble the input sequence
        Tensor H;
        if (cfg_.ablation.uniform_concat) {
            std::vector<Tensor> rows = {h_endo};
            if (cfg_.use_static()) {
                rows.push_back(z_a);
                rows.push_back(z_g);
            }
            rows.push_back(z_text);
            if (exo_hist_tokens.defined()) rows.push_back(exo_hist_tokens);
            if (exo_fut_tokens.defined()) rows.push_back(exo_fut_tokens);
            H = diff::concat_rows(rows);
        } else if (cfg_.meta_tokens_in_sequence()) {
            H = assemble_endo_tokens(h_endo, z_a, z_g);
        } else {
            H = h_endo;
        }

        // gate input for the MoE
        Tensor gate_in;
        if (cfg_.use_moe()) {
            if (cfg_.ablation.uniform_moe) {
                Tensor hist_pool = exo_hist_tokens.defined() ? diff::mean_rows(exo_hist_tokens)
                                                             : Tensor::zeros({1, cfg_.d_model});
                Tensor fut_pool = exo_fut_tokens.defined() ? diff::mean_rows(exo_fut_tokens)
                                                           : Tensor::zeros({1, cfg_.d_model});
                Tensor static_pool = cfg_.use_static()
                                         ? diff::mean_rows(diff::concat_rows({z_a, z_g}))
                                         : Tensor::zeros({1, cfg_.d_model});
                gate_in = diff::concat_cols({text_vec, static_pool, hist_pool, fut_pool});
            } else {
                gate_in = text_vec;
            }
        }

        for (std::size_t layer = 0; layer < cfg_.n_layers; ++layer) {
            const LayerRefs& L = layers_[layer];
            GateTrace trace;
            trace.layer = layer;

            H = self_attention_block(H, L.self, L.self_ln, cfg_.n_heads).out;

            if (cfg_.ablation.uniform_crossattn) {
                // one undifferentiated stage: every external token is a
                // key/value in a single cross-attention pass
                std::vector<Tensor> kv;
                if (exo_hist_tokens.defined()) kv.push_back(exo_hist_tokens);
                if (exo_fut_tokens.defined()) kv.push_back(exo_fut_tokens);
                if (cfg_.use_static()) {
                    kv.push_back(z_a);
                    kv.push_back(z_g);
                }
                kv.push_back(z_text);
                auto out = cross_attention_gated(H, diff::concat_rows(kv), L.cross_hist,
                                                 L.gate_hist, L.cross_hist_ln, cfg_.n_heads,
                                                 cfg_.gated_residual(), alpha_override_hist);
                H = out.out;
                trace.alpha_hist = out.alpha;
            } else if (cfg_.use_cross_attention()) {
                if (exo_hist_tokens.defined() && cfg_.exo_hist_len > 0) {
                    auto out = cross_attention_gated(H, exo_hist_tokens, L.cross_hist,
                                                     L.gate_hist, L.cross_hist_ln, cfg_.n_heads,
                                                     cfg_.gated_residual(), alpha_override_hist);
                    H = out.out;
                    trace.alpha_hist = out.alpha;
                }
                if (exo_fut_tokens.defined() && cfg_.exo_fut_len > 0) {
                    auto out = cross_attention_gated(H, exo_fut_tokens, L.cross_fut, L.gate_fut,
                                                     L.cross_fut_ln, cfg_.n_heads,
                                                     cfg_.gated_residual(), alpha_override_fut);
                    H = out.out;
                    trace.alpha_fut = out.alpha;
                }
            }

            if (cfg_.use_moe()) {
                MoeOut m =
                    moe_block(H, gate_in, L.moe, L.moe_ln, cfg_.top_k(), moe_weight_override);
                H = m.out;
                trace.moe_weights = std::move(m.weights);
            } else {
                H = diff::layer_norm(diff::add(H, ffn_forward(H, L.ffn)), L.moe_ln.gamma,
                                     L.moe_ln.beta);
            }
            res.traces.push_back(std::move(trace));
        }

        res.forecast_norm = forecast_head(H, N);
        res.forecast = data::denormalize(
            {res.forecast_norm.data().begin(), res.forecast_norm.data().end()}, res.stats);
        return res;
    }

    // Head reads only the temporal tokens; meta rows inform via attention.
    Tensor forecast_head(const Tensor& H_final, std::size_t n_temporal) const {
        Tensor temporal =
            H_final.rows() == n_temporal ? H_final : diff::slice_rows(H_final, 0, n_temporal);
        Tensor flat = diff::reshape(temporal, {1, n_temporal * cfg_.d_model});
        return diff::add(diff::matmul(flat, p("head.W")), p("head.b"));
    }

    // -----------------------------------------------------------------------
    // Checkpoint: one self-describing file, text header plus named tensors
    // with little-endian f64 payloads. Round-trips bitwise.
    // -----------------------------------------------------------------------

    void save_checkpoint(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw ParseError("cannot write checkpoint: " + path);
        f << "AURACKPT1\n";
        for (const auto& [k, v] : config_kv()) f << k << '=' << v << '\n';
        const std::size_t extra = cfg_.exo_dim > 0 ? 2 : 0;
        f << "tensors=" << params_.size() + extra << '\n';
        auto write_tensor = [&](const std::string& name, const diff::Shape& shape,
                                const std::vector<double>& values) {
            f << name << ' ' << shape.size();
            for (std::size_t d : shape) f << ' ' << d;
            f << '\n';
            for (double x : values) {
                const std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
                char bytes[8];
                for (int b = 0; b < 8; ++b)
                    bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
                f.write(bytes, 8);
            }
            f << '\n';
        };
        if (cfg_.exo_dim > 0) {
            write_tensor("buffer.exo_mean", {cfg_.exo_dim}, exo_stats_.mean);
            write_tensor("buffer.exo_std", {cfg_.exo_dim}, exo_stats_.std);
        }
        for (std::size_t i = 0; i < params_.size(); ++i)
            write_tensor(params_[i].name(), params_[i].tensor().shape(), params_[i].values());
        f << "end\n";
        if (!f) throw ParseError("short write on checkpoint: " + path);
    }

    static AuraModel load_checkpoint(const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw ParseError("cannot open checkpoint: " + path);
        std::string line;
        if (!std::getline(f, line) || line != "AURACKPT1")
            throw ParseError("not an aura checkpoint: " + path);

        std::map<std::string, std::string> kv;
        std::size_t n_tensors = 0;
        while (std::getline(f, line)) {
            if (line.rfind("tensors=", 0) == 0) {
                n_tensors = std::stoul(line.substr(8));
                break;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ParseError("malformed checkpoint config line: " + line);
            kv[line.substr(0, eq)] = line.substr(eq + 1);
        }

        AuraModel model(config_from_kv(kv), /*seed=*/0);
        std::size_t loaded = 0;
        for (std::size_t i = 0; i < n_tensors; ++i) {
            if (!std::getline(f, line)) throw ParseError("truncated checkpoint tensor table");
            std::istringstream hs(line);
            std::string name;
            std::size_t rank;
            hs >> name >> rank;
            diff::Shape shape(rank);
            for (auto& d : shape) hs >> d;
            if (!hs) throw ParseError("malformed tensor header: " + line);
            std::vector<double> values(diff::numel(shape));
            for (auto& x : values) {
                char bytes[8];
                f.read(bytes, 8);
                if (!f) throw ParseError("truncated tensor payload for " + name);
                std::uint64_t bits = 0;
                for (int b = 0; b < 8; ++b)
                    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[b]))
                            << (8 * b);
                x = std::bit_cast<double>(bits);
            }
            f.get();  // trailing newline
            if (name == "buffer.exo_mean") {
                model.exo_stats_.mean = std::move(values);
            } else if (name == "buffer.exo_std") {
                model.exo_stats_.std = std::move(values);
            } else {
                if (!model.params_.contains(name))
                    throw ParseError("checkpoint tensor not in model: " + name);
                auto& param = model.params_.at(name);
                if (param.tensor().shape() != shape)
                    throw ParseError("checkpoint shape mismatch for " + name);
                param.values() = std::move(values);
                ++loaded;
            }
        }
        if (loaded != model.params_.size())
            throw ParseError("checkpoint is missing " +
                             std::to_string(model.params_.size() - loaded) + " tensors");
        if (!std::getline(f, line) || line != "end")
            throw ParseError("checkpoint missing end marker");
        return model;
    }

private:
    struct LayerRefs {
        AttnParams self;
        LnParams self_ln;
        AttnParams cross_hist, cross_fut;
        GateParams gate_hist, gate_fut;
        LnParams cross_hist_ln, cross_fut_ln;
        MoeParams moe;
        ExpertParams ffn;
        LnParams moe_ln;
    };

    void check_sample(const data::SampleRecord& s) const {
        if (s.endo_hist.size() != cfg_.endo_len)
            throw DimError("sample history length " + std::to_string(s.endo_hist.size()) +
                           " does not match endo_len " + std::to_string(cfg_.endo_len));
        if (!s.endo_target.empty() && s.endo_target.size() != cfg_.horizon)
            throw DimError("sample target length " + std::to_string(s.endo_target.size()) +
                           " does not match horizon " + std::to_string(cfg_.horizon));
        if (cfg_.use_exo()) {
            if (cfg_.exo_hist_len > 0 && s.exo_hist.size() != cfg_.exo_hist_len)
                throw DimError("sample exo_hist length mismatch");
            if (cfg_.exo_fut_len > 0 && s.exo_fut.size() != cfg_.exo_fut_len)
                throw DimError("sample exo_fut length mismatch");
            for (const auto& row : s.exo_hist)
                if (row.size() != cfg_.exo_dim) throw DimError("sample exo_hist width mismatch");
            for (const auto& row : s.exo_fut)
                if (row.size() != cfg_.exo_dim) throw DimError("sample exo_fut width mismatch");
        }
    }

    // Per-variable patching then concatenation along the token axis, variable
    // order first, patch order second. The projector W is shared with the
    // endogenous series; the positional table is the exogenous one.
    Tensor embed_exo_block(const std::vector<std::vector<double>>& block,
                           std::size_t n_patches) const {
        if (block.empty() || n_patches == 0) return Tensor();
        std::vector<Tensor> parts;
        parts.reserve(cfg_.exo_dim);
        for (std::size_t d = 0; d < cfg_.exo_dim; ++d) {
            std::vector<double> series(block.size());
            for (std::size_t t = 0; t < block.size(); ++t) series[t] = block[t][d];
            parts.push_back(
                patch_embed(patch_matrix(series, cfg_.patch_len), p("patch.W"), p("pos.exo")));
        }
        return parts.size() == 1 ? parts[0] : diff::concat_rows(parts);
    }

    const Tensor& p(const std::string& name) const { return params_.at(name).tensor(); }

    // uniform(-1/sqrt(fan_in), +1/sqrt(fan_in))
    Tensor weight_init(const std::string& name, diff::Shape shape, std::size_t fan_in, Rng& rng) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        return params_.add(name, diff::random_uniform(std::move(shape), -bound, bound, rng));
    }
    Tensor affine_init(const std::string& name, std::size_t out_dim, std::size_t in_dim,
                       Rng& rng) {
        return weight_init(name, {out_dim, in_dim}, in_dim, rng);
    }
    Tensor bias_init(const std::string& name, std::size_t dim, std::size_t in_dim, Rng& rng) {
        return weight_init(name, {1, dim}, in_dim, rng);
    }

    AttnParams attn_init(const std::string& prefix, Rng& rng) {
        const std::size_t D = cfg_.d_model;
        AttnParams a;
        a.Wq = affine_init(prefix + ".Wq", D, D, rng);
        a.bq = bias_init(prefix + ".bq", D, D, rng);
        a.Wk = affine_init(prefix + ".Wk", D, D, rng);
        a.bk = bias_init(prefix + ".bk", D, D, rng);
        a.Wv = affine_init(prefix + ".Wv", D, D, rng);
        a.bv = bias_init(prefix + ".bv", D, D, rng);
        a.Wo = affine_init(prefix + ".Wo", D, D, rng);
        a.bo = bias_init(prefix + ".bo", D, D, rng);
        return a;
    }

    LnParams ln_init(const std::string& prefix) {
        LnParams ln;
        ln.gamma = params_.add(prefix + ".g", Tensor::full({1, cfg_.d_model}, 1.0));
        ln.beta = params_.add(prefix + ".b", Tensor::zeros({1, cfg_.d_model}));
        return ln;
    }

    GateParams gate_init(const std::string& prefix, Rng& rng) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(cfg_.d_model));
        GateParams g;
        g.u = params_.add(prefix + ".u",
                          diff::random_uniform({cfg_.d_model, 1}, -bound, bound, rng));
        // zero bias so alpha starts near 0.5
        g.c = params_.add(prefix + ".c", Tensor::zeros({1, 1}));
        return g;
    }

    ExpertParams expert_init(const std::string& prefix, Rng& rng) {
        const std::size_t D = cfg_.d_model, F = cfg_.ffn_width();
        ExpertParams e;
        e.W1 = weight_init(prefix + ".W1", {D, F}, D, rng);  // H [MxD] * W1 [DxF]
        e.b1 = bias_init(prefix + ".b1", F, D, rng);
        e.W2 = weight_init(prefix + ".W2", {F, D}, F, rng);
        e.b2 = bias_init(prefix + ".b2", D, F, rng);
        return e;
    }

    void init_params(Rng& rng) {
        const std::size_t D = cfg_.d_model, P = cfg_.patch_len, E = cfg_.text_embed_dim;
        const std::size_t N = cfg_.n_endo_patches();
        const double wb = 1.0 / std::sqrt(static_cast<double>(P));
        params_.add("patch.W", diff::random_uniform({D, P}, -wb, wb, rng));
        params_.add("pos.endo", diff::random_normal({N, D}, 0.0, 0.02, rng));
        if (cfg_.use_exo()) {
            const std::size_t n_exo_pe =
                std::max<std::size_t>(1, std::max(cfg_.n_exo_hist_patches(),
                                                  cfg_.n_exo_fut_patches()));
            params_.add("pos.exo", diff::random_normal({n_exo_pe, D}, 0.0, 0.02, rng));
        }
        if (cfg_.use_static()) {
            affine_init("static.attr.W", D, E, rng);
            bias_init("static.attr.b", D, E, rng);
            affine_init("static.geo.W", D, 3, rng);
            bias_init("static.geo.b", D, 3, rng);
        }
        if (cfg_.use_text_token()) {
            affine_init("text.proj.W", D, E, rng);
            bias_init("text.proj.b", D, E, rng);
        }

        layers_.clear();
        for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
            const std::string lp = "layer" + std::to_string(l);
            LayerRefs L;
            L.self = attn_init(lp + ".self", rng);
            L.self_ln = ln_init(lp + ".self.ln");
            if (cfg_.ablation.uniform_crossattn) {
                L.cross_hist = attn_init(lp + ".xall", rng);
                L.cross_hist_ln = ln_init(lp + ".xall.ln");
                L.gate_hist = gate_init(lp + ".xall.gate", rng);
            } else if (cfg_.use_cross_attention()) {
                if (cfg_.exo_hist_len > 0) {
                    L.cross_hist = attn_init(lp + ".xh", rng);
                    L.cross_hist_ln = ln_init(lp + ".xh.ln");
                    if (cfg_.gated_residual()) L.gate_hist = gate_init(lp + ".xh.gate", rng);
                }
                if (cfg_.exo_fut_len > 0) {
                    L.cross_fut = attn_init(lp + ".xf", rng);
                    L.cross_fut_ln = ln_init(lp + ".xf.ln");
                    if (cfg_.gated_residual()) L.gate_fut = gate_init(lp + ".xf.gate", rng);
                }
            }
            if (cfg_.use_moe()) {
                const std::size_t Eg = cfg_.moe_gate_dim();
                L.moe.gate_W = affine_init(lp + ".moe.gate.W", cfg_.n_experts, Eg, rng);
                L.moe.gate_b = bias_init(lp + ".moe.gate.b", cfg_.n_experts, Eg, rng);
                for (std::size_t i = 0; i < cfg_.n_experts; ++i)
                    L.moe.experts.push_back(
                        expert_init(lp + ".moe.e" + std::to_string(i), rng));
            } else {
                L.ffn = expert_init(lp + ".ffn", rng);
            }
            L.moe_ln = ln_init(lp + ".moe.ln");
            layers_.push_back(std::move(L));
        }

        const std::size_t flat = cfg_.n_endo_patches() * D;
        weight_init("head.W", {flat, cfg_.horizon}, flat, rng);
        bias_init("head.b", cfg_.horizon, flat, rng);
    }

    std::vector<std::pair<std::string, std::string>> config_kv() const {
        char buf[64];
        auto num = [&](double v) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return std::string(buf);
        };
        std::vector<std::pair<std::string, std::string>> kv;
        kv.emplace_back("patch_len", std::to_string(cfg_.patch_len));
        kv.emplace_back("d_model", std::to_string(cfg_.d_model));
        kv.emplace_back("n_layers", std::to_string(cfg_.n_layers));
        kv.emplace_back("n_heads", std::to_string(cfg_.n_heads));
        kv.emplace_back("n_experts", std::to_string(cfg_.n_experts));
        kv.emplace_back("moe_top_k", std::to_string(cfg_.moe_top_k));
        kv.emplace_back("ffn_hidden", std::to_string(cfg_.ffn_hidden));
        kv.emplace_back("endo_len", std::to_string(cfg_.endo_len));
        kv.emplace_back("horizon", std::to_string(cfg_.horizon));
        kv.emplace_back("exo_dim", std::to_string(cfg_.exo_dim));
        kv.emplace_back("exo_hist_len", std::to_string(cfg_.exo_hist_len));
        kv.emplace_back("exo_fut_len", std::to_string(cfg_.exo_fut_len));
        kv.emplace_back("text_embed_dim", std::to_string(cfg_.text_embed_dim));
        kv.emplace_back("ablation", cfg_.ablation.to_string());
        kv.emplace_back("ctx.temp_low", num(cfg_.ctx_rules.temp_low_c));
        kv.emplace_back("ctx.temp_high", num(cfg_.ctx_rules.temp_high_c));
        kv.emplace_back("ctx.humidity_low", num(cfg_.ctx_rules.humidity_low));
        kv.emplace_back("ctx.humidity_high", num(cfg_.ctx_rules.humidity_high));
        kv.emplace_back("ctx.highland_m", num(cfg_.ctx_rules.highland_cutoff_m));
        kv.emplace_back("prompt_template", cfg_.prompt_template);
        return kv;
    }

    static ModelConfig config_from_kv(const std::map<std::string, std::string>& kv) {
        ModelConfig c;
        auto geti = [&](const char* k, std::size_t& out) {
            auto it = kv.find(k);
            if (it == kv.end()) throw ParseError(std::string("checkpoint missing config key ") + k);
            out = std::stoul(it->second);
        };
        auto getd = [&](const char* k, double& out) {
            auto it = kv.find(k);
            if (it == kv.end()) throw ParseError(std::string("checkpoint missing config key ") + k);
            out = std::stod(it->second);
        };
        geti("patch_len", c.patch_len);
        geti("d_model", c.d_model);
        geti("n_layers", c.n_layers);
        geti("n_heads", c.n_heads);
        geti("n_experts", c.n_experts);
        geti("moe_top_k", c.moe_top_k);
        geti("ffn_hidden", c.ffn_hidden);
        geti("endo_len", c.endo_len);
        geti("horizon", c.horizon);
        geti("exo_dim", c.exo_dim);
        geti("exo_hist_len", c.exo_hist_len);
        geti("exo_fut_len", c.exo_fut_len);
        geti("text_embed_dim", c.text_embed_dim);
        if (auto it = kv.find("ablation"); it != kv.end())
            c.ablation = AblationFlags::parse(it->second);
        getd("ctx.temp_low", c.ctx_rules.temp_low_c);
        getd("ctx.temp_high", c.ctx_rules.temp_high_c);
        getd("ctx.humidity_low", c.ctx_rules.humidity_low);
        getd("ctx.humidity_high", c.ctx_rules.humidity_high);
        getd("ctx.highland_m", c.ctx_rules.highland_cutoff_m);
        if (auto it = kv.find("prompt_template"); it != kv.end()) c.prompt_template = it->second;
        return c;
    }

    // Text embeddings are pure; memoize per distinct string.
    const std::vector<double>& embed_cached(const context::TextEmbedder& embedder,
                                            const std::string& text) const {
        auto it = embed_cache_.find(text);
        if (it != embed_cache_.end()) return it->second;
        auto e = embedder.embed(text);
        return embed_cache_.emplace(text, std::move(e.vector)).first->second;
    }

    ModelConfig cfg_;
    diff::ParamStore params_;
    std::vector<LayerRefs> layers_;
    data::ExoStats exo_stats_;
    mutable std::map<std::string, std::vector<double>> embed_cache_;
};

}  // namespace aura::model
