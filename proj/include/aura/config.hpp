#pragma once

// Plain key=value run configuration with dotted sections, a documented
// schema, and --set overrides. Unknown keys are errors.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "aura/error.hpp"

namespace aura::config {

enum class KeyType { string, integer, number, boolean };

struct KeySpec {
    const char* key;
    KeyType type;
    const char* default_value;  // empty = no default
    const char* help;
};

// The full configuration surface. Defaults reflect the shipped synthetic
// presets; everything is overridable from the file or --set.
inline const std::vector<KeySpec>& schema() {
    static const std::vector<KeySpec> kSchema = {
        {"data.source", KeyType::string, "synthetic", "synthetic | csv"},
        {"data.csv", KeyType::string, "", "dataset CSV path (data.source=csv)"},
        {"data.sidecar", KeyType::string, "", "static-attribute sidecar JSON path"},
        {"data.endo_col", KeyType::string, "mp", "endogenous column name"},
        {"data.exo_cols", KeyType::string, "n2,ip", "comma-separated exogenous column names"},
        {"data.input_len", KeyType::integer, "6", "history window length T"},
        {"data.horizon", KeyType::integer, "18", "forecast horizon S"},
        {"data.stride", KeyType::integer, "6", "window stride"},
        {"data.train_frac", KeyType::number, "0.55", "chronological train fraction"},
        {"data.val_frac", KeyType::number, "0.07", "chronological validation fraction"},
        {"data.train_end", KeyType::string, "", "explicit train boundary (ISO-8601), overrides fractions"},
        {"data.val_end", KeyType::string, "", "explicit validation boundary (ISO-8601)"},

        {"model.patch_len", KeyType::integer, "6", "patch length P"},
        {"model.d_model", KeyType::integer, "24", "token width D"},
        {"model.n_layers", KeyType::integer, "1", "encoder layers L"},
        {"model.n_heads", KeyType::integer, "2", "attention heads"},
        {"model.n_experts", KeyType::integer, "2", "MoE expert count K"},
        {"model.moe_top_k", KeyType::integer, "0", "top-k experts (0 = dense)"},
        {"model.ffn_hidden", KeyType::integer, "48", "expert hidden width (0 = 2*d_model)"},
        {"model.text_embed_dim", KeyType::integer, "64", "text embedding width"},
        {"model.seed", KeyType::integer, "1", "parameter initialization seed"},

        {"train.lr", KeyType::number, "0.005", "Adam learning rate"},
        {"train.max_epochs", KeyType::integer, "100", "epoch budget"},
        {"train.patience", KeyType::integer, "100", "early-stopping patience"},
        {"train.batch_size", KeyType::integer, "32", "minibatch size"},
        {"train.seed", KeyType::integer, "1", "shuffle seed"},
        {"train.ablation", KeyType::string, "", "comma list of ablation flags"},

        {"detect.target_far", KeyType::number, "0.05", "false-alarm budget"},
        {"detect.holdout", KeyType::boolean, "true", "calibrate on half the normals, report FAR on the rest"},
        {"detect.metric", KeyType::string, "mse", "residual score: mse | mae"},
        {"detect.seed", KeyType::integer, "1", "calibration split seed"},

        {"context.temp_low", KeyType::number, "10", "temperature low/moderate boundary (C)"},
        {"context.temp_high", KeyType::number, "28", "temperature moderate/high boundary (C)"},
        {"context.humidity_low", KeyType::number, "30", "humidity low/moderate boundary (%)"},
        {"context.humidity_high", KeyType::number, "70", "humidity moderate/high boundary (%)"},
        {"context.highland_m", KeyType::number, "1500", "highland elevation cutoff (m)"},
        {"context.template", KeyType::string, "default", "prompt template id"},

        {"embedder.kind", KeyType::string, "hash", "hash | service"},
        {"embedder.url", KeyType::string, "http://127.0.0.1:8753/embed", "embedding service URL"},
        {"embedder.timeout_ms", KeyType::integer, "2000", "service timeout"},
        {"embedder.retries", KeyType::integer, "2", "service retry budget"},

        {"synth.n_series", KeyType::integer, "150", "generated series count"},
        {"synth.series_len", KeyType::integer, "156", "rows per series"},
        {"synth.seed", KeyType::integer, "1", "generator seed"},
        {"synth.a1", KeyType::number, "0.3", "endogenous AR coefficient"},
        {"synth.b1", KeyType::number, "0.2", "n2 coupling"},
        {"synth.b2", KeyType::number, "0.1", "ip coupling"},
        {"synth.demand_gain", KeyType::number, "0.3", "unregulated passthrough share"},
        {"synth.noise_std", KeyType::number, "0.05", "endogenous noise std"},
        {"synth.base_n2", KeyType::number, "2.0", "n2 base level"},
        {"synth.base_ip", KeyType::number, "1.5", "ip base level"},
        {"synth.amplitude", KeyType::number, "2.0", "exogenous profile amplitude"},
        {"synth.period", KeyType::number, "96", "slow cycle period (steps)"},
        {"synth.smoothness", KeyType::number, "0.8", "walk AR coefficient"},
        {"synth.jitter", KeyType::number, "0.18", "walk weight"},
        {"synth.osc_amplitude", KeyType::number, "0.4", "intrinsic oscillation amplitude"},
        {"synth.osc_period", KeyType::number, "7", "intrinsic oscillation period"},
        {"synth.regime_amplitude", KeyType::number, "0.35", "load-regime coupling tilt"},
        {"synth.regime_block_days", KeyType::integer, "2", "load regime persistence (days)"},
        {"synth.weekend_demand", KeyType::number, "0.5", "weekend/holiday passthrough lift"},
        {"synth.static_spread", KeyType::number, "0.9", "variant passthrough spread"},
        {"synth.geo_gain", KeyType::number, "0.15", "altitude passthrough gain (per km)"},
        {"synth.legacy_fraction", KeyType::number, "0.35", "fraction of series with legacy sensors"},
        {"synth.sensor_noise", KeyType::number, "0.6", "legacy sensor noise std"},
        {"synth.fault_onset_frac", KeyType::number, "0.85", "fault onset position"},
        {"synth.fault_drift", KeyType::number, "0.5", "response drift magnitude"},
        {"synth.fault_fraction", KeyType::number, "0.5", "fraction of faulted series"},

        {"eval.plot_samples", KeyType::integer, "8", "forecasts embedded in the eval report"},
        {"gates.bins", KeyType::integer, "20", "histogram bins for the gate report"},

        {"out.dir", KeyType::string, "out", "artifact output directory"},
    };
    return kSchema;
}

inline const KeySpec* find_spec(const std::string& key) {
    for (const auto& s : schema())
        if (key == s.key) return &s;
    return nullptr;
}

class RunConfig {
public:
    RunConfig() {
        for (const auto& s : schema()) values_[s.key] = s.default_value;
    }

    static RunConfig load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw ConfigError("cannot open config file: " + path);
        RunConfig cfg;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(f, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            auto trim = [](std::string s) {
                const auto a = s.find_first_not_of(" \t\r");
                if (a == std::string::npos) return std::string();
                const auto b = s.find_last_not_of(" \t\r");
                return s.substr(a, b - a + 1);
            };
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(path + ":" + std::to_string(line_no) +
                                  ": expected key=value, got '" + line + "'");
            cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
        return cfg;
    }

    // `key=value`, as given to --set.
    void set_kv(const std::string& kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        set(kv.substr(0, eq), kv.substr(eq + 1));
    }

    void set(const std::string& key, const std::string& value) {
        const KeySpec* spec = find_spec(key);
        if (!spec) throw ConfigError("unknown configuration key: " + key);
        validate_type(*spec, value);
        values_[key] = value;
    }

    const std::string& get_string(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError("unknown configuration key: " + key);
        return it->second;
    }

    long long get_int(const std::string& key) const {
        try {
            return std::stoll(get_string(key));
        } catch (const ConfigError&) {
            throw;
        } catch (...) {
            throw ConfigError("configuration key " + key + " is not an integer: '" +
                              get_string(key) + "'");
        }
    }

    std::size_t get_size(const std::string& key) const {
        long long v = get_int(key);
        if (v < 0) throw ConfigError("configuration key " + key + " must be nonnegative");
        return static_cast<std::size_t>(v);
    }

    double get_double(const std::string& key) const {
        try {
            return std::stod(get_string(key));
        } catch (const ConfigError&) {
            throw;
        } catch (...) {
            throw ConfigError("configuration key " + key + " is not a number: '" +
                              get_string(key) + "'");
        }
    }

    bool get_bool(const std::string& key) const {
        const std::string& v = get_string(key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ConfigError("configuration key " + key + " is not a boolean: '" + v + "'");
    }

    std::vector<std::string> get_list(const std::string& key) const {
        std::vector<std::string> out;
        std::stringstream ss(get_string(key));
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) out.push_back(tok);
        return out;
    }

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    static void validate_type(const KeySpec& spec, const std::string& value) {
        if (value.empty()) return;
        try {
            std::size_t pos = 0;
            switch (spec.type) {
                case KeyType::integer:
                    (void)std::stoll(value, &pos);
                    if (pos != value.size()) throw std::invalid_argument("trailing");
                    break;
                case KeyType::number:
                    (void)std::stod(value, &pos);
                    if (pos != value.size()) throw std::invalid_argument("trailing");
                    break;
                case KeyType::boolean:
                    if (value != "true" && value != "false" && value != "0" && value != "1" &&
                        value != "yes" && value != "no")
                        throw std::invalid_argument("bool");
                    break;
                case KeyType::string:
                    break;
            }
        } catch (...) {
            throw ConfigError(std::string("invalid value for ") + spec.key + ": '" + value + "'");
        }
    }

    std::map<std::string, std::string> values_;
};

}  // namespace aura::config
