#pragma once

// Dataset ingestion, windowing, per-instance normalization, chronological
// splitting, and a seeded synthetic sensor-data generator with fault
// injection.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aura/context.hpp"
#include "aura/error.hpp"
#include "aura/rng.hpp"

namespace aura::data {

enum class Label { normal, abnormal, unlabeled };

inline std::string label_name(Label l) {
    return l == Label::normal ? "normal" : l == Label::abnormal ? "abnormal" : "unlabeled";
}

// One forecasting instance. Values are raw scale; normalization is applied at
// the model boundary.
struct SampleRecord {
    std::vector<double> endo_hist;               // T
    std::vector<double> endo_target;             // S
    std::vector<std::vector<double>> exo_hist;   // T rows of D_ex
    std::vector<std::vector<double>> exo_fut;    // S rows of D_ex
    std::string attr_text;
    std::array<double, 3> geo{0, 0, 0};          // lat_deg, lon_deg, alt_m
    context::ContextRecord ctx;
    Label label = Label::unlabeled;
    std::string series_id;
    std::int64_t t0 = 0;  // timestamp of the first history step

    std::string sample_id() const { return series_id + "#" + std::to_string(t0); }
};

struct StaticAttrs {
    std::string registration;
    std::array<double, 3> geo{0, 0, 0};
    bool present = false;
};

struct Row {
    std::int64_t ts = 0;
    double endo = 0;
    std::vector<double> exo;
    context::ContextRecord ctx;
    Label label = Label::normal;
};

struct Series {
    std::string id;
    std::vector<Row> rows;
    StaticAttrs attrs;
};

struct Dataset {
    std::vector<Series> series;
    std::string endo_name = "mp";
    std::vector<std::string> exo_names;
    bool attrs_missing = false;  // warning flag: sidecar absent or incomplete
    std::size_t exo_dim() const { return exo_names.size(); }
};

struct DatasetSchema {
    std::string endo_col;
    std::vector<std::string> exo_cols;
};

// ---------------------------------------------------------------------------
// Timestamps: ISO-8601 UTC ("2023-01-01T00:00:00Z", 'T' or ' ' separator,
// trailing 'Z' optional) or raw integer seconds.
// ---------------------------------------------------------------------------

inline bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

inline std::int64_t days_from_civil(int y, int m, int d) {
    // Howard Hinnant's algorithm; valid far beyond the range we need.
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2) / 5 +
                         static_cast<unsigned>(d) - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline std::int64_t parse_timestamp(const std::string& s) {
    if (s.empty()) throw ParseError("empty timestamp");
    bool digits = true;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c)) && c != '-') digits = false;
    if (digits && s.find('-', 1) == std::string::npos) return std::stoll(s);

    int y, mo, d, h = 0, mi = 0, sec = 0;
    char sep = 0;
    if (std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &sec) >= 3) {
        if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec > 60)
            throw ParseError("invalid timestamp: " + s);
        return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + sec;
    }
    throw ParseError("unparseable timestamp: " + s);
}

inline std::string format_timestamp(std::int64_t ts) {
    std::int64_t days = ts / 86400;
    std::int64_t rem = ts % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    // invert days_from_civil
    std::int64_t z = days + 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    y += (m <= 2);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ",
                  static_cast<long long>(y), m, d, static_cast<long long>(rem / 3600),
                  static_cast<long long>((rem / 60) % 60), static_cast<long long>(rem % 60));
    return buf;
}

// ---------------------------------------------------------------------------
// CSV loading.
//
// Required columns: timestamp, the schema's endo column, and the schema's
// exogenous columns. Optional: series_id (absent -> whole file is one series),
// context columns (temp_c, humidity_pct, terrain, elevation_m, is_holiday,
// load) and a fault column (0/1, empty cell -> unlabeled). Unrecognized extra
// columns are ignored.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_double(const std::string& s, std::size_t line_no, const std::string& col) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (...) {
        throw ParseError("line " + std::to_string(line_no) + ": cannot parse '" + s +
                         "' in column " + col);
    }
}

}  // namespace detail

inline Dataset load_csv_dataset(const std::string& path, const DatasetSchema& schema,
                                const std::string& sidecar_path = "") {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open dataset file: " + path);

    std::string header_line;
    if (!std::getline(f, header_line)) throw ParseError("empty dataset file: " + path);
    const auto header = detail::split_csv_line(header_line);

    auto col_of = [&](const std::string& name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        return std::nullopt;
    };
    auto require = [&](const std::string& name) {
        auto c = col_of(name);
        if (!c) throw ParseError("dataset header missing required column '" + name + "'");
        return *c;
    };

    const std::size_t ts_col = require("timestamp");
    const std::size_t endo_col = require(schema.endo_col);
    std::vector<std::size_t> exo_cols;
    for (const auto& name : schema.exo_cols) exo_cols.push_back(require(name));
    const auto sid_col = col_of("series_id");
    const auto temp_col = col_of("temp_c");
    const auto hum_col = col_of("humidity_pct");
    const auto terrain_col = col_of("terrain");
    const auto elev_col = col_of("elevation_m");
    const auto holiday_col = col_of("is_holiday");
    const auto load_col = col_of("load");
    const auto fault_col = col_of("fault");

    Dataset ds;
    ds.endo_name = schema.endo_col;
    ds.exo_names = schema.exo_cols;
    std::map<std::string, std::size_t> series_index;

    std::string line;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " cells, got " +
                             std::to_string(cells.size()));

        std::string sid = sid_col ? cells[*sid_col]
                                  : std::filesystem::path(path).stem().string();
        auto [it, inserted] = series_index.try_emplace(sid, ds.series.size());
        if (inserted) {
            ds.series.push_back({});
            ds.series.back().id = sid;
        }
        Series& series = ds.series[it->second];

        Row row;
        try {
            row.ts = parse_timestamp(cells[ts_col]);
        } catch (const ParseError& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!series.rows.empty() && row.ts <= series.rows.back().ts)
            throw ParseError("line " + std::to_string(line_no) +
                             ": non-monotone timestamp for series '" + sid + "'");
        row.endo = detail::parse_double(cells[endo_col], line_no, schema.endo_col);
        row.exo.reserve(exo_cols.size());
        for (std::size_t i = 0; i < exo_cols.size(); ++i)
            row.exo.push_back(detail::parse_double(cells[exo_cols[i]], line_no, schema.exo_cols[i]));

        row.ctx.timestamp_utc = row.ts;
        if (temp_col && !cells[*temp_col].empty())
            row.ctx.ambient_temp_c = detail::parse_double(cells[*temp_col], line_no, "temp_c");
        if (hum_col && !cells[*hum_col].empty())
            row.ctx.humidity_pct = detail::parse_double(cells[*hum_col], line_no, "humidity_pct");
        if (terrain_col && !cells[*terrain_col].empty())
            row.ctx.terrain = context::terrain_from_string(cells[*terrain_col]);
        if (elev_col && !cells[*elev_col].empty())
            row.ctx.airport_elevation_m =
                detail::parse_double(cells[*elev_col], line_no, "elevation_m");
        if (holiday_col && !cells[*holiday_col].empty())
            row.ctx.is_holiday = cells[*holiday_col] != "0";
        if (load_col && !cells[*load_col].empty())
            row.ctx.load_level = context::level_from_string(cells[*load_col]);

        if (fault_col) {
            const std::string& cell = cells[*fault_col];
            row.label = cell.empty() || cell == "?" ? Label::unlabeled
                      : cell == "0"                 ? Label::normal
                                                    : Label::abnormal;
        }
        series.rows.push_back(std::move(row));
    }

    if (!sidecar_path.empty() && std::filesystem::exists(sidecar_path)) {
        std::ifstream sf(sidecar_path);
        nlohmann::json j;
        try {
            sf >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("sidecar " + sidecar_path + ": " + e.what());
        }
        for (auto& series : ds.series) {
            if (!j.contains(series.id)) {
                ds.attrs_missing = true;
                continue;
            }
            const auto& a = j[series.id];
            series.attrs.registration = a.value("registration", "");
            series.attrs.geo = {a.value("lat", 0.0), a.value("lon", 0.0), a.value("alt", 0.0)};
            series.attrs.present = true;
        }
    } else {
        ds.attrs_missing = true;
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Sliding windows.
// ---------------------------------------------------------------------------

inline std::vector<SampleRecord> make_windows(const Series& series, std::size_t T, std::size_t S,
                                              std::size_t stride) {
    if (T < 1 || S < 1 || stride < 1) throw ValueError("make_windows: T, S, stride must be >= 1");
    std::vector<SampleRecord> out;
    if (series.rows.size() < T + S) return out;
    for (std::size_t off = 0; off + T + S <= series.rows.size(); off += stride) {
        SampleRecord s;
        s.series_id = series.id;
        s.t0 = series.rows[off].ts;
        s.attr_text = series.attrs.registration;
        s.geo = series.attrs.geo;
        // context at the forecast origin (last observed step)
        s.ctx = series.rows[off + T - 1].ctx;
        s.endo_hist.reserve(T);
        s.exo_hist.reserve(T);
        for (std::size_t t = 0; t < T; ++t) {
            s.endo_hist.push_back(series.rows[off + t].endo);
            s.exo_hist.push_back(series.rows[off + t].exo);
        }
        s.endo_target.reserve(S);
        s.exo_fut.reserve(S);
        std::size_t abnormal_rows = 0;
        bool any_unlabeled = false;
        for (std::size_t t = 0; t < S; ++t) {
            const Row& r = series.rows[off + T + t];
            s.endo_target.push_back(r.endo);
            s.exo_fut.push_back(r.exo);
            abnormal_rows += r.label == Label::abnormal;
            any_unlabeled = any_unlabeled || r.label == Label::unlabeled;
        }
        // A window counts as abnormal when at least a third of its horizon is
        // fault-affected; smaller overlaps are ambiguous and stay unlabeled.
        s.label = abnormal_rows * 3 >= S ? Label::abnormal
                  : abnormal_rows > 0    ? Label::unlabeled
                  : any_unlabeled        ? Label::unlabeled
                                         : Label::normal;
        out.push_back(std::move(s));
    }
    return out;
}

inline std::vector<SampleRecord> make_windows(const Dataset& ds, std::size_t T, std::size_t S,
                                              std::size_t stride) {
    std::vector<SampleRecord> out;
    for (const auto& series : ds.series) {
        auto w = make_windows(series, T, S, stride);
        out.insert(out.end(), w.begin(), w.end());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Normalization. Endogenous values are standardized per window by the history
// mean/std; the same stats transform the target and de-normalize forecasts.
// Exogenous columns are standardized by training-set statistics.
// ---------------------------------------------------------------------------

struct NormalizationStats {
    double mean = 0.0;
    double std = 1.0;
};

struct ExoStats {
    std::vector<double> mean, std;
};

inline NormalizationStats window_stats(const std::vector<double>& xs) {
    NormalizationStats st;
    if (xs.empty()) return st;
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    double v = 0.0;
    for (double x : xs) v += (x - m) * (x - m);
    v /= static_cast<double>(xs.size());
    st.mean = m;
    st.std = std::sqrt(v);
    if (st.std < 1e-8) st.std = 1.0;  // constant-window guard
    return st;
}

inline ExoStats compute_exo_stats(const std::vector<SampleRecord>& samples, std::size_t exo_dim) {
    ExoStats st;
    st.mean.assign(exo_dim, 0.0);
    st.std.assign(exo_dim, 1.0);
    if (exo_dim == 0 || samples.empty()) return st;
    std::vector<double> sum(exo_dim, 0.0), sq(exo_dim, 0.0);
    std::size_t n = 0;
    auto accum = [&](const std::vector<std::vector<double>>& block) {
        for (const auto& row : block) {
            for (std::size_t d = 0; d < exo_dim; ++d) {
                sum[d] += row[d];
                sq[d] += row[d] * row[d];
            }
            ++n;
        }
    };
    for (const auto& s : samples) {
        accum(s.exo_hist);
        accum(s.exo_fut);
    }
    for (std::size_t d = 0; d < exo_dim; ++d) {
        st.mean[d] = sum[d] / static_cast<double>(n);
        double v = sq[d] / static_cast<double>(n) - st.mean[d] * st.mean[d];
        st.std[d] = v > 1e-16 ? std::sqrt(v) : 1.0;
    }
    return st;
}

// Returns the normalized copy and writes the window stats used.
inline SampleRecord normalize(const SampleRecord& s, const ExoStats& exo,
                              NormalizationStats& out_stats) {
    SampleRecord n = s;
    out_stats = window_stats(s.endo_hist);
    for (double& x : n.endo_hist) x = (x - out_stats.mean) / out_stats.std;
    for (double& x : n.endo_target) x = (x - out_stats.mean) / out_stats.std;
    auto norm_block = [&](std::vector<std::vector<double>>& block) {
        for (auto& row : block)
            for (std::size_t d = 0; d < row.size(); ++d)
                row[d] = (row[d] - exo.mean[d]) / exo.std[d];
    };
    norm_block(n.exo_hist);
    norm_block(n.exo_fut);
    return n;
}

inline std::vector<double> denormalize(const std::vector<double>& forecast,
                                       const NormalizationStats& st) {
    std::vector<double> out(forecast.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = forecast[i] * st.std + st.mean;
    return out;
}

// ---------------------------------------------------------------------------
// Chronological split. Assignment is purely by t0; train/val keep only
// label=normal records (the semi-supervised contract) and count exclusions.
// ---------------------------------------------------------------------------

struct SplitResult {
    std::vector<SampleRecord> train, val, test;
    std::size_t excluded_abnormal = 0;
    std::size_t excluded_unlabeled = 0;
};

inline SplitResult chronological_split(const std::vector<SampleRecord>& samples,
                                       std::int64_t train_end, std::int64_t val_end) {
    if (train_end > val_end)
        throw ValueError("chronological_split: boundaries must be ordered");
    SplitResult r;
    for (const auto& s : samples) {
        if (s.t0 < train_end || s.t0 < val_end) {
            if (s.label == Label::abnormal) {
                ++r.excluded_abnormal;
                continue;
            }
            if (s.label == Label::unlabeled) {
                ++r.excluded_unlabeled;
                continue;
            }
            (s.t0 < train_end ? r.train : r.val).push_back(s);
        } else {
            r.test.push_back(s);
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Synthetic PRSOV-like generator.
//
// The endogenous pressure follows
//   mp(t) = a1*mp(t-1) + b1_eff(t)*n2(t) + b2_eff(t)*ip(t) + d0_j*ip(t)
//           + A*sin(2*pi*t/osc_period + phi_j) + eps(t)
// The intrinsic oscillation A*sin(...) has a period shorter than the history
// window, which pins the per-window standard deviation to a near-constant
// value: window statistics stay well conditioned and the remaining structure
// is observable on the normalized scale. Three structured influences change
// the shape of the exogenous response rather than a pure scale (per-window
// standardization cancels pure gains, so only mix changes are observable):
//   - d0_j: per-series unregulated passthrough share, set by the registration
//     variant and airport altitude (the static attributes);
//   - load regime: tilts the coupling ratio, b1_eff = b1*(1 + amp*dir) and
//     b2_eff = b2*(1 - amp*dir) with dir in {-1, 0, +1} per load level;
//   - fault injection: multiplies (b1, b2) by (1 - drift) from the onset
//     index, which both shifts the regulated level and distorts the
//     regulated-to-passthrough mix.
// Everything is a pure function of the seed.
// ---------------------------------------------------------------------------

struct FaultSpec {
    double onset_frac = 0.80;        // onset index = floor(series_len * onset_frac)
    double drift = 0.5;              // response multiplier becomes (1 - drift)
    double affected_fraction = 0.5;  // fraction of series that are faulted
};

struct SyntheticConfig {
    std::size_t n_series = 24;
    std::size_t series_len = 480;
    std::uint64_t seed = 1;

    double a1 = 0.7, b1 = 0.2, b2 = 0.1;
    double demand_gain = 0.20;  // unregulated passthrough on ip, fault-invariant
    double noise_std = 0.05;
    FaultSpec fault;

    // exogenous profile: slow triangle load cycle plus mean-reverting AR(1)
    // walks (the walks are what make the future exogenous values genuinely
    // informative)
    double base_n2 = 2.0, base_ip = 1.5;
    double profile_amplitude = 2.0;
    double profile_period = 96.0;     // slow cycle, steps
    double profile_smoothness = 0.6;  // AR(1) coefficient of the walks
    double profile_jitter = 0.15;     // walk weight relative to the amplitude

    // intrinsic endogenous oscillation (period < history window)
    double osc_amplitude = 0.35;
    double osc_period = 7.0;

    // context coupling
    double regime_amplitude = 0.10;     // coupling tilt per load level
    std::size_t regime_block_days = 4;  // load regime persists this many days
    double weekend_demand = 0.4;        // weekend/holiday passthrough multiplier - 1
    double static_spread = 0.5;         // variant passthrough share = d0*(1 +/- spread)
    double geo_gain = 0.15;             // passthrough share += d0 * geo_gain * alt_km

    // per-series exogenous sensor quality (named in the attribute text);
    // legacy suites record the exogenous series with additive noise
    double legacy_fraction = 0.3;
    double sensor_noise = 0.25;

    std::int64_t start_ts = 1672531200;  // 2023-01-01T00:00:00Z
    std::int64_t step_seconds = 3600;
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t x = seed ^ (salt * 0x9E3779B97F4A7C15ull + 0xD1B54A32D192ED03ull);
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
}

}  // namespace detail

inline Dataset generate_synthetic(const SyntheticConfig& cfg) {
    if (cfg.n_series == 0 || cfg.series_len == 0)
        throw ValueError("generate_synthetic: n_series and series_len must be positive");
    Dataset ds;
    ds.exo_names = {"n2", "ip"};

    const std::size_t onset =
        static_cast<std::size_t>(static_cast<double>(cfg.series_len) * cfg.fault.onset_frac);

    for (std::size_t j = 0; j < cfg.n_series; ++j) {
        Rng rng(detail::mix_seed(cfg.seed, j * 2 + 1));
        Rng ctx_rng(detail::mix_seed(cfg.seed, j * 2 + 2));

        Series series;
        {
            char buf[16];
            std::snprintf(buf, sizeof buf, "B-2%03zu", j);
            series.id = buf;
        }

        const bool variant_alpha = rng.uniform() < 0.5;
        const bool legacy_sensors = rng.uniform() < cfg.legacy_fraction;
        const bool highland = rng.uniform() < 0.35;
        const double lat = rng.uniform(18.0, 46.0);
        const double lon = rng.uniform(86.0, 126.0);
        const double alt = highland ? rng.uniform(1800.0, 2600.0) : rng.uniform(5.0, 200.0);
        // static attributes set the unregulated passthrough share
        const double d0 = cfg.demand_gain *
                          (1.0 + (variant_alpha ? cfg.static_spread : -cfg.static_spread) +
                           cfg.geo_gain * (alt / 1000.0));

        series.attrs.registration = series.id + std::string(" fleet variant ") +
                                    (variant_alpha ? "alpha" : "beta") + " sensors " +
                                    (legacy_sensors ? "legacy" : "modern");
        series.attrs.geo = {lat, lon, alt};
        series.attrs.present = true;

        const bool faulted = rng.uniform() < cfg.fault.affected_fraction;
        const double phase = rng.uniform(0.0, cfg.profile_period);
        const double osc_phase = rng.uniform(0.0, 6.2831853);
        const double rho = cfg.profile_smoothness;
        const double walk_step = std::sqrt(std::max(0.0, 1.0 - rho * rho));
        double walk_n2 = 0.0, walk_ip = 0.0;

        // load regime per multi-day block, drawn lazily in block order
        std::vector<context::Level> block_load;
        auto load_for_day = [&](std::size_t day) {
            const std::size_t block = day / std::max<std::size_t>(1, cfg.regime_block_days);
            while (block_load.size() <= block) {
                const double u = ctx_rng.uniform();
                block_load.push_back(u < 0.3   ? context::Level::low
                                     : u < 0.7 ? context::Level::moderate
                                               : context::Level::high);
            }
            return block_load[block];
        };

        double mp_prev = 0.0;
        series.rows.reserve(cfg.series_len);
        for (std::size_t t = 0; t < cfg.series_len; ++t) {
            const double eps = rng.normal(0.0, cfg.noise_std);  // drawn unconditionally
            walk_n2 = rho * walk_n2 + walk_step * rng.normal(0.0, 1.0);
            walk_ip = rho * walk_ip + walk_step * rng.normal(0.0, 1.0);
            const double sensor_eps_n2 = rng.normal(0.0, cfg.sensor_noise);
            const double sensor_eps_ip = rng.normal(0.0, cfg.sensor_noise);

            auto tri = [](double x) {
                const double f = x - std::floor(x);
                return 2.0 * std::fabs(f - 0.5);
            };
            const double ph = (static_cast<double>(t) + phase) / cfg.profile_period;
            const double n2 = cfg.base_n2 +
                              cfg.profile_amplitude *
                                  (0.10 * tri(ph) + cfg.profile_jitter * walk_n2);
            const double ip = cfg.base_ip +
                              cfg.profile_amplitude *
                                  (0.07 * tri(ph - 0.28) +
                                   0.8 * cfg.profile_jitter * walk_ip);

            const std::size_t day = t * static_cast<std::size_t>(cfg.step_seconds) / 86400;
            const context::Level load = load_for_day(day);
            const double dir = load == context::Level::high  ? 1.0
                               : load == context::Level::low ? -1.0
                                                             : 0.0;
            const double b1_eff = cfg.b1 * (1.0 + cfg.regime_amplitude * dir);
            const double b2_eff = cfg.b2 * (1.0 - cfg.regime_amplitude * dir);

            // calendar-driven demand: weekend/holiday raises the passthrough
            const std::int64_t ts_now =
                cfg.start_ts + static_cast<std::int64_t>(t) * cfg.step_seconds;
            const std::int64_t epoch_day = ts_now / 86400;
            const std::int64_t dow = ((epoch_day % 7) + 7) % 7;  // 2,3 = Sat,Sun
            const bool is_weekend = dow == 2 || dow == 3;
            const bool is_holiday = (day % 61) == 17;
            const double d0_eff =
                d0 * (1.0 + cfg.weekend_demand * ((is_weekend || is_holiday) ? 1.0 : 0.0));

            const bool in_fault = faulted && t >= onset;
            const double gain = (in_fault ? 1.0 - cfg.fault.drift : 1.0);
            const double osc = cfg.osc_amplitude *
                               std::sin(6.2831853071795865 * static_cast<double>(t) /
                                            cfg.osc_period +
                                        osc_phase);
            const double mp = cfg.a1 * mp_prev + gain * (b1_eff * n2 + b2_eff * ip) +
                              d0_eff * ip + osc + eps;
            mp_prev = mp;

            Row row;
            row.ts = ts_now;
            row.endo = mp;
            row.exo = {n2 + (legacy_sensors ? sensor_eps_n2 : 0.0),
                       ip + (legacy_sensors ? sensor_eps_ip : 0.0)};
            row.label = in_fault ? Label::abnormal : Label::normal;

            row.ctx.timestamp_utc = row.ts;
            const double doy = static_cast<double>(day % 365);
            row.ctx.ambient_temp_c = 16.0 + 12.0 * std::sin(6.2831853 * doy / 365.0) +
                                     ctx_rng.uniform(-3.0, 3.0);
            row.ctx.humidity_pct =
                std::clamp(55.0 + 25.0 * std::sin(6.2831853 * doy / 365.0 + 1.3) +
                               ctx_rng.uniform(-10.0, 10.0),
                           0.0, 100.0);
            row.ctx.terrain = highland ? context::Terrain::mountain : context::Terrain::plain;
            row.ctx.airport_elevation_m = alt;
            row.ctx.is_holiday = is_holiday;
            row.ctx.load_level = load;

            series.rows.push_back(std::move(row));
        }
        ds.series.push_back(std::move(series));
    }
    return ds;
}

// ---------------------------------------------------------------------------
// CSV + sidecar writing (the generator's output formats).
// ---------------------------------------------------------------------------

inline void write_csv(const Dataset& ds, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ParseError("cannot write dataset file: " + path);
    f << "series_id,timestamp,";
    f << ds.endo_name;
    for (const auto& name : ds.exo_names) f << ',' << name;
    f << ",temp_c,humidity_pct,terrain,elevation_m,is_holiday,load,fault\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const auto& series : ds.series) {
        for (const auto& row : series.rows) {
            f << series.id << ',' << format_timestamp(row.ts) << ',' << num(row.endo);
            for (double x : row.exo) f << ',' << num(x);
            f << ',' << (row.ctx.ambient_temp_c ? num(*row.ctx.ambient_temp_c) : "");
            f << ',' << (row.ctx.humidity_pct ? num(*row.ctx.humidity_pct) : "");
            f << ',' << (row.ctx.terrain ? context::terrain_name(*row.ctx.terrain) : "");
            f << ',' << (row.ctx.airport_elevation_m ? num(*row.ctx.airport_elevation_m) : "");
            f << ',' << (row.ctx.is_holiday ? (*row.ctx.is_holiday ? "1" : "0") : "");
            f << ',' << (row.ctx.load_level ? context::level_name(*row.ctx.load_level) : "");
            f << ',' << (row.label == Label::abnormal ? "1" : "0");
            f << '\n';
        }
    }
}

inline void write_sidecar(const Dataset& ds, const std::string& path) {
    nlohmann::ordered_json j;
    for (const auto& series : ds.series) {
        j[series.id] = {{"registration", series.attrs.registration},
                        {"lat", series.attrs.geo[0]},
                        {"lon", series.attrs.geo[1]},
                        {"alt", series.attrs.geo[2]}};
    }
    std::ofstream f(path);
    if (!f) throw ParseError("cannot write sidecar file: " + path);
    f << j.dump(2) << '\n';
}

}  // namespace aura::data
