#pragma once

// Dynamic-context pipeline: rule-based discretization of raw operating
// context, structured prompt construction, and a pluggable text embedder
// standing in for a frozen language-model encoder.

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aura/error.hpp"

namespace aura::context {

enum class Terrain { plain, plateau, coastal, mountain, unknown };
enum class Level { low, moderate, high, unknown };

inline std::string terrain_name(Terrain t) {
    switch (t) {
        case Terrain::plain: return "plain";
        case Terrain::plateau: return "plateau";
        case Terrain::coastal: return "coastal";
        case Terrain::mountain: return "mountain";
        default: return "unknown";
    }
}

inline Terrain terrain_from_string(const std::string& s) {
    if (s == "plain") return Terrain::plain;
    if (s == "plateau") return Terrain::plateau;
    if (s == "coastal") return Terrain::coastal;
    if (s == "mountain") return Terrain::mountain;
    return Terrain::unknown;
}

inline std::string level_name(Level l) {
    switch (l) {
        case Level::low: return "low";
        case Level::moderate: return "moderate";
        case Level::high: return "high";
        default: return "unknown";
    }
}

inline Level level_from_string(const std::string& s) {
    if (s == "low") return Level::low;
    if (s == "moderate") return Level::moderate;
    if (s == "high") return Level::high;
    return Level::unknown;
}

// Raw per-sample operating context. Missing measurements stay unset.
struct ContextRecord {
    std::int64_t timestamp_utc = 0;  // unix seconds
    std::optional<double> ambient_temp_c;
    std::optional<double> humidity_pct;  // [0, 100] when present
    std::optional<Terrain> terrain;
    std::optional<double> airport_elevation_m;
    std::optional<bool> is_holiday;
    std::optional<Level> load_level;

    void validate() const {
        if (humidity_pct && (*humidity_pct < 0.0 || *humidity_pct > 100.0))
            throw ValueError("humidity_pct out of [0,100]: " + std::to_string(*humidity_pct));
    }
};

enum class YesNo { yes, no };
enum class YesNoUnknown { yes, no, unknown };
enum class TerrainLevel { lowland, highland, unknown };

struct DiscretizedContext {
    YesNo weekend = YesNo::no;
    YesNoUnknown holiday = YesNoUnknown::unknown;
    Level temp_level = Level::unknown;
    Level humidity_level = Level::unknown;
    TerrainLevel terrain_level = TerrainLevel::unknown;
    Level load_level = Level::unknown;
};

inline std::string yes_no(YesNo v) { return v == YesNo::yes ? "yes" : "no"; }
inline std::string yes_no_unknown(YesNoUnknown v) {
    return v == YesNoUnknown::yes ? "yes" : v == YesNoUnknown::no ? "no" : "unknown";
}
inline std::string terrain_level_name(TerrainLevel v) {
    return v == TerrainLevel::lowland ? "lowland"
         : v == TerrainLevel::highland ? "highland"
                                       : "unknown";
}

// Bucket boundaries for the rule-based discretization. Values are config,
// not constants of the method.
struct DiscretizationRules {
    double temp_low_c = 10.0;    // below -> low
    double temp_high_c = 28.0;   // at or above -> high
    double humidity_low = 30.0;
    double humidity_high = 70.0;
    double highland_cutoff_m = 1500.0;
};

// Total: every record (including all-missing) maps to a valid result; missing
// inputs become "unknown".
inline DiscretizedContext discretize_context(const ContextRecord& raw,
                                             const DiscretizationRules& rules = {}) {
    raw.validate();
    DiscretizedContext out;

    // 1970-01-01 (epoch day 0) is a Thursday, so day%7 == 2 is Saturday and
    // 3 is Sunday. Floor-divide so pre-epoch timestamps stay correct.
    std::int64_t days = raw.timestamp_utc / 86400;
    if (raw.timestamp_utc % 86400 < 0) --days;
    const std::int64_t dow = ((days % 7) + 7) % 7;
    out.weekend = (dow == 2 || dow == 3) ? YesNo::yes : YesNo::no;

    if (raw.is_holiday)
        out.holiday = *raw.is_holiday ? YesNoUnknown::yes : YesNoUnknown::no;

    if (raw.ambient_temp_c) {
        const double t = *raw.ambient_temp_c;
        out.temp_level = t < rules.temp_low_c    ? Level::low
                       : t < rules.temp_high_c   ? Level::moderate
                                                 : Level::high;
    }
    if (raw.humidity_pct) {
        const double h = *raw.humidity_pct;
        out.humidity_level = h < rules.humidity_low  ? Level::low
                           : h < rules.humidity_high ? Level::moderate
                                                     : Level::high;
    }

    if (raw.terrain && *raw.terrain != Terrain::unknown) {
        out.terrain_level = (*raw.terrain == Terrain::plateau || *raw.terrain == Terrain::mountain)
                                ? TerrainLevel::highland
                                : TerrainLevel::lowland;
    } else if (raw.airport_elevation_m) {
        out.terrain_level = *raw.airport_elevation_m >= rules.highland_cutoff_m
                                ? TerrainLevel::highland
                                : TerrainLevel::lowland;
    }

    if (raw.load_level) out.load_level = *raw.load_level;
    return out;
}

// Deterministic fill-in of a fixed template. The text enumerates the
// categorical labels and constrains the downstream reader to contextual
// explanation only. Each factor renders with its own vocabulary so that a
// bag-of-words encoder keeps the factors separable (no shared value words
// across fields).
inline std::string build_prompt(const DiscretizedContext& ctx,
                                const std::string& template_id = "default") {
    if (template_id != "default")
        throw ConfigError("unknown prompt template: " + template_id);
    auto pick = [](Level l, const char* lo, const char* mid, const char* hi) {
        switch (l) {
            case Level::low: return lo;
            case Level::moderate: return mid;
            case Level::high: return hi;
            default: return "unknown";
        }
    };
    std::string p;
    p += "Operational context for the upcoming takeoff. ";
    p += std::string("Day type: ") + (ctx.weekend == YesNo::yes ? "weekend" : "weekday") + ". ";
    p += std::string("Calendar: ") + (ctx.holiday == YesNoUnknown::yes   ? "holiday"
                                      : ctx.holiday == YesNoUnknown::no ? "workday"
                                                                        : "unknown") + ". ";
    p += std::string("Ambient temperature level: ") +
         pick(ctx.temp_level, "cold", "mild", "hot") + ". ";
    p += std::string("Humidity level: ") +
         pick(ctx.humidity_level, "dry", "balanced", "humid") + ". ";
    p += std::string("Terrain category: ") + terrain_level_name(ctx.terrain_level) + ". ";
    p += std::string("Operational load level: ") +
         pick(ctx.load_level, "light", "typical", "heavy") + ". ";
    p += "Describe only how these external operating conditions may influence pressure "
         "regulation behavior. Do not make diagnostic statements, fault attributions, or "
         "maintenance recommendations.";
    return p;
}

struct TextEmbedding {
    std::vector<double> vector;
    std::size_t token_count = 0;
};

// Deterministic, fixed-width, mean-pooled text encoder contract.
class TextEmbedder {
public:
    virtual ~TextEmbedder() = default;
    virtual TextEmbedding embed(const std::string& text) const = 0;
    virtual std::size_t dim() const = 0;
};

// Default embedder: whitespace/punctuation tokenizer, per-token feature
// hashing with sign hashing, mean over tokens, L2 normalization. Runs with
// zero model downloads.
class HashingEmbedder final : public TextEmbedder {
public:
    explicit HashingEmbedder(std::size_t dim = 256) : dim_(dim) {
        if (dim_ == 0) throw ValueError("embedder dimension must be positive");
    }

    std::size_t dim() const override { return dim_; }

    static std::vector<std::string> tokenize(const std::string& text) {
        std::vector<std::string> out;
        std::string cur;
        for (unsigned char c : text) {
            if (std::isalnum(c)) {
                cur.push_back(static_cast<char>(std::tolower(c)));
            } else if (!cur.empty()) {
                out.push_back(cur);
                cur.clear();
            }
        }
        if (!cur.empty()) out.push_back(cur);
        return out;
    }

    // FNV-1a 64-bit.
    static std::uint64_t hash_token(const std::string& tok) {
        std::uint64_t h = 1469598103934665603ull;
        for (unsigned char c : tok) {
            h ^= c;
            h *= 1099511628211ull;
        }
        return h;
    }

    std::size_t bucket_of(const std::string& tok) const {
        return static_cast<std::size_t>(hash_token(tok) % dim_);
    }
    double sign_of(const std::string& tok) const {
        return ((hash_token(tok) >> 32) & 1ull) ? 1.0 : -1.0;
    }

    TextEmbedding embed(const std::string& text) const override {
        const auto tokens = tokenize(text);
        if (tokens.empty()) throw ValueError("embed_text: empty text");
        // Integer bucket counts make the embedding a pure function of the
        // token multiset (summation-order independent, bitwise).
        std::vector<long long> counts(dim_, 0);
        for (const auto& t : tokens)
            counts[bucket_of(t)] += sign_of(t) > 0 ? 1 : -1;
        TextEmbedding e;
        e.token_count = tokens.size();
        e.vector.resize(dim_);
        const double inv_n = 1.0 / static_cast<double>(tokens.size());
        double norm2 = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) {
            e.vector[i] = static_cast<double>(counts[i]) * inv_n;
            norm2 += e.vector[i] * e.vector[i];
        }
        if (norm2 > 0.0) {
            const double inv = 1.0 / std::sqrt(norm2);
            for (double& x : e.vector) x *= inv;
        } else {
            // All token signs cancelled; fall back to a fixed unit vector so
            // the width/norm contract still holds.
            e.vector[0] = 1.0;
        }
        return e;
    }

private:
    std::size_t dim_;
};

}  // namespace aura::context
