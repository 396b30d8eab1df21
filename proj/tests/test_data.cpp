#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "aura/data.hpp"

using namespace aura;
using namespace aura::data;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

void write_file(const std::string& path, const std::string& body) {
    std::ofstream f(path);
    f << body;
}

}  // namespace

TEST_CASE("timestamp parse and format round-trip") {
    CHECK(parse_timestamp("1970-01-01T00:00:00Z") == 0);
    CHECK(parse_timestamp("1970-01-02T00:00:00Z") == 86400);
    CHECK(parse_timestamp("2023-01-01T00:00:00Z") == 1672531200);
    CHECK(parse_timestamp("1672531200") == 1672531200);
    CHECK(format_timestamp(1672531200) == "2023-01-01T00:00:00Z");
    for (std::int64_t ts : {0LL, 86399LL, 1672531200LL, 1735689600LL, 946684800LL})
        CHECK(parse_timestamp(format_timestamp(ts)) == ts);
    CHECK_THROWS_AS(parse_timestamp("not-a-time"), ParseError);
}

TEST_CASE("load_csv_dataset: well-formed file preserves order") {
    const std::string path = temp_path("aura_t1.csv");
    write_file(path,
               "series_id,timestamp,mp,n2,ip\n"
               "s1,2023-01-01T00:00:00Z,1.0,2.0,3.0\n"
               "s1,2023-01-01T01:00:00Z,1.5,2.5,3.5\n"
               "s1,2023-01-01T02:00:00Z,2.0,3.0,4.0\n");
    Dataset ds = load_csv_dataset(path, {"mp", {"n2", "ip"}});
    REQUIRE(ds.series.size() == 1);
    REQUIRE(ds.series[0].rows.size() == 3);
    CHECK(ds.series[0].rows[0].endo == 1.0);
    CHECK(ds.series[0].rows[2].exo == std::vector<double>{3.0, 4.0});
    CHECK(ds.exo_dim() == 2);
    CHECK(ds.attrs_missing);  // no sidecar provided
}

TEST_CASE("load_csv_dataset: shuffled timestamps name the offending line") {
    const std::string path = temp_path("aura_t2.csv");
    write_file(path,
               "series_id,timestamp,mp,n2,ip\n"
               "s1,2023-01-01T02:00:00Z,1.0,2.0,3.0\n"
               "s1,2023-01-01T01:00:00Z,1.5,2.5,3.5\n");
    try {
        load_csv_dataset(path, {"mp", {"n2", "ip"}});
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
        CHECK(std::string(e.what()).find("non-monotone") != std::string::npos);
    }
}

TEST_CASE("load_csv_dataset: malformed cell names the line") {
    const std::string path = temp_path("aura_t3.csv");
    write_file(path,
               "series_id,timestamp,mp,n2,ip\n"
               "s1,2023-01-01T00:00:00Z,1.0,zzz,3.0\n");
    try {
        load_csv_dataset(path, {"mp", {"n2", "ip"}});
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("load_csv_dataset: EPF-shaped file without series_id") {
    const std::string path = temp_path("NP.csv");
    std::string body = "timestamp,price,load_fc,gen_fc\n";
    for (int i = 0; i < 5; ++i)
        body += "2023-01-01T0" + std::to_string(i) + ":00:00Z," + std::to_string(10.0 + i) + "," +
                std::to_string(100.0 + i) + "," + std::to_string(50.0 + i) + "\n";
    write_file(path, body);
    Dataset ds = load_csv_dataset(path, {"price", {"load_fc", "gen_fc"}});
    CHECK(ds.exo_dim() == 2);
    REQUIRE(ds.series.size() == 1);
    CHECK(ds.series[0].id == "NP");
    CHECK(ds.series[0].rows.size() == 5);
    // no fault column -> rows default to normal so splits stay usable
    CHECK(ds.series[0].rows[0].label == Label::normal);
}

TEST_CASE("load_csv_dataset: missing required column") {
    const std::string path = temp_path("aura_t4.csv");
    write_file(path, "series_id,timestamp,mp\ns1,2023-01-01T00:00:00Z,1.0\n");
    CHECK_THROWS_AS(load_csv_dataset(path, {"mp", {"n2"}}), ParseError);
}

TEST_CASE("sidecar attributes attach per series") {
    const std::string path = temp_path("aura_t5.csv");
    const std::string side = temp_path("aura_t5.attrs.json");
    write_file(path,
               "series_id,timestamp,mp,n2\n"
               "a,2023-01-01T00:00:00Z,1,2\n"
               "b,2023-01-01T00:00:00Z,1,2\n");
    write_file(side,
               R"({"a": {"registration": "B-2000 variant alpha", "lat": 23.39, "lon": 113.30, "alt": 15.0}})");
    Dataset ds = load_csv_dataset(path, {"mp", {"n2"}}, side);
    CHECK(ds.series[0].attrs.present);
    CHECK(ds.series[0].attrs.registration == "B-2000 variant alpha");
    CHECK(ds.series[0].attrs.geo[0] == 23.39);
    CHECK_FALSE(ds.series[1].attrs.present);
    CHECK(ds.attrs_missing);  // series b had no entry
}

TEST_CASE("make_windows counts") {
    Series s;
    s.id = "w";
    auto fill = [&](std::size_t n) {
        s.rows.clear();
        for (std::size_t i = 0; i < n; ++i) {
            Row r;
            r.ts = static_cast<std::int64_t>(i) * 3600;
            r.endo = static_cast<double>(i);
            r.exo = {1.0, 2.0};
            s.rows.push_back(r);
        }
    };
    fill(24);
    CHECK(make_windows(s, 6, 18, 24).size() == 1);  // exactly one window
    fill(23);
    CHECK(make_windows(s, 6, 18, 1).empty());  // too short
    fill(48);
    CHECK(make_windows(s, 6, 18, 1).size() == 25);  // len - (T+S) + 1

    fill(30);
    auto w = make_windows(s, 6, 18, 24);
    REQUIRE(w.size() == 1);
    CHECK(w[0].endo_hist.size() == 6);
    CHECK(w[0].endo_target.size() == 18);
    CHECK(w[0].exo_hist.size() == 6);
    CHECK(w[0].exo_fut.size() == 18);
    CHECK(w[0].t0 == 0);
    CHECK(w[0].endo_hist[0] == 0.0);
    CHECK(w[0].endo_target[0] == 6.0);
}

TEST_CASE("normalization: degenerate and simple windows") {
    SampleRecord s;
    s.endo_hist = {5, 5, 5, 5, 5, 5};
    s.endo_target = {5, 6};
    ExoStats exo;
    NormalizationStats st;
    SampleRecord n = normalize(s, exo, st);
    CHECK(st.std == 1.0);  // constant-window guard
    for (double x : n.endo_hist) CHECK(x == 0.0);
    CHECK(n.endo_target[1] == 1.0);

    s.endo_hist = {0, 2};
    s.endo_target = {};
    n = normalize(s, exo, st);
    CHECK(st.mean == 1.0);
    CHECK(st.std == 1.0);
    CHECK(n.endo_hist == std::vector<double>{-1.0, 1.0});
}

TEST_CASE("normalize/denormalize round-trip within 1e-12") {
    Rng rng(3);
    ExoStats exo;
    exo.mean = {0.5, -1.0};
    exo.std = {2.0, 0.7};
    for (int trial = 0; trial < 30; ++trial) {
        SampleRecord s;
        for (int i = 0; i < 6; ++i) s.endo_hist.push_back(rng.uniform(-10, 10));
        for (int i = 0; i < 4; ++i) s.endo_target.push_back(rng.uniform(-10, 10));
        NormalizationStats st;
        SampleRecord n = normalize(s, exo, st);
        auto back = denormalize(n.endo_target, st);
        for (std::size_t i = 0; i < back.size(); ++i)
            CHECK(back[i] == doctest::Approx(s.endo_target[i]).epsilon(1e-12));
    }
}

TEST_CASE("chronological_split: assignment and semi-supervised exclusion") {
    std::vector<SampleRecord> samples;
    auto mk = [&](std::int64_t t0, Label l) {
        SampleRecord s;
        s.t0 = t0;
        s.label = l;
        s.series_id = "x";
        samples.push_back(s);
    };
    mk(0, Label::normal);
    mk(10, Label::normal);
    mk(15, Label::abnormal);  // in train period -> excluded, counted
    mk(25, Label::normal);    // val
    mk(35, Label::abnormal);  // test
    mk(40, Label::normal);    // test

    SplitResult r = chronological_split(samples, 20, 30);
    CHECK(r.train.size() == 2);
    CHECK(r.val.size() == 1);
    CHECK(r.test.size() == 2);
    CHECK(r.excluded_abnormal == 1);
    for (const auto& s : r.train) CHECK(s.label == Label::normal);
    for (const auto& s : r.val) CHECK(s.label == Label::normal);

    CHECK_THROWS_AS(chronological_split(samples, 30, 20), ValueError);

    SplitResult all_train = chronological_split(samples, 100, 100);
    CHECK(all_train.train.size() == 4);
    CHECK(all_train.test.empty());
}

TEST_CASE("synthetic: steady state closed form") {
    SyntheticConfig cfg;
    cfg.n_series = 2;
    cfg.series_len = 200;
    cfg.noise_std = 0.0;
    cfg.fault.drift = 0.0;
    cfg.profile_amplitude = 0.0;  // constant exogenous
    cfg.regime_amplitude = 0.0;
    cfg.static_spread = 0.0;
    cfg.geo_gain = 0.0;
    cfg.demand_gain = 0.0;
    cfg.osc_amplitude = 0.0;
    cfg.legacy_fraction = 0.0;  // recorded exo == true exo
    Dataset ds = generate_synthetic(cfg);
    const auto& rows = ds.series[0].rows;
    const double n2 = rows.back().exo[0];
    const double ip = rows.back().exo[1];
    CHECK(n2 == doctest::Approx(cfg.base_n2).epsilon(1e-12));
    const double fixed_point = (cfg.b1 * n2 + cfg.b2 * ip) / (1.0 - cfg.a1);
    CHECK(rows.back().endo == doctest::Approx(fixed_point).epsilon(1e-9));
}

TEST_CASE("synthetic: same seed is bitwise identical") {
    SyntheticConfig cfg;
    cfg.n_series = 3;
    cfg.series_len = 50;
    Dataset a = generate_synthetic(cfg);
    Dataset b = generate_synthetic(cfg);
    REQUIRE(a.series.size() == b.series.size());
    for (std::size_t j = 0; j < a.series.size(); ++j) {
        REQUIRE(a.series[j].rows.size() == b.series[j].rows.size());
        CHECK(a.series[j].attrs.registration == b.series[j].attrs.registration);
        for (std::size_t t = 0; t < a.series[j].rows.size(); ++t) {
            CHECK(std::memcmp(&a.series[j].rows[t].endo, &b.series[j].rows[t].endo,
                              sizeof(double)) == 0);
            CHECK(a.series[j].rows[t].exo == b.series[j].rows[t].exo);
        }
    }
}

TEST_CASE("synthetic: drift halves the post-onset steady state") {
    SyntheticConfig cfg;
    cfg.n_series = 6;
    cfg.series_len = 400;
    cfg.noise_std = 0.0;
    cfg.profile_amplitude = 0.0;
    cfg.regime_amplitude = 0.0;
    cfg.static_spread = 0.0;
    cfg.geo_gain = 0.0;
    cfg.demand_gain = 0.0;
    cfg.osc_amplitude = 0.0;
    cfg.legacy_fraction = 0.0;
    cfg.fault.drift = 0.5;
    cfg.fault.onset_frac = 0.5;
    cfg.fault.affected_fraction = 1.0;
    Dataset ds = generate_synthetic(cfg);
    const auto& rows = ds.series[0].rows;
    const double healthy = rows[cfg.series_len / 2 - 1].endo;
    const double faulted = rows.back().endo;
    CHECK(faulted == doctest::Approx(0.5 * healthy).epsilon(1e-6));
    CHECK(rows.back().label == Label::abnormal);
    CHECK(rows[0].label == Label::normal);
}

TEST_CASE("synthetic: faults separate from no-fault by more than 3 sigma") {
    SyntheticConfig cfg;  // default coupling/noise
    cfg.n_series = 8;
    cfg.series_len = 300;
    cfg.fault.affected_fraction = 1.0;
    SyntheticConfig no_fault = cfg;
    no_fault.fault.drift = 0.0;

    Dataset with = generate_synthetic(cfg);
    Dataset without = generate_synthetic(no_fault);

    const std::size_t onset =
        static_cast<std::size_t>(static_cast<double>(cfg.series_len) * cfg.fault.onset_frac);
    double total = 0.0;
    std::size_t n = 0;
    for (std::size_t j = 0; j < cfg.n_series; ++j) {
        for (std::size_t t = onset; t < cfg.series_len; ++t) {
            total += std::fabs(with.series[j].rows[t].endo - without.series[j].rows[t].endo);
            ++n;
        }
    }
    CHECK(total / static_cast<double>(n) > 3.0 * cfg.noise_std);
}

TEST_CASE("synthetic corpus round-trips through csv + sidecar") {
    SyntheticConfig cfg;
    cfg.n_series = 2;
    cfg.series_len = 40;
    Dataset ds = generate_synthetic(cfg);
    const std::string csv = temp_path("aura_synth.csv");
    const std::string side = temp_path("aura_synth.attrs.json");
    write_csv(ds, csv);
    write_sidecar(ds, side);

    Dataset back = load_csv_dataset(csv, {"mp", {"n2", "ip"}}, side);
    REQUIRE(back.series.size() == 2);
    CHECK_FALSE(back.attrs_missing);
    for (std::size_t j = 0; j < 2; ++j) {
        CHECK(back.series[j].attrs.registration == ds.series[j].attrs.registration);
        REQUIRE(back.series[j].rows.size() == ds.series[j].rows.size());
        for (std::size_t t = 0; t < ds.series[j].rows.size(); ++t) {
            const Row& a = ds.series[j].rows[t];
            const Row& b = back.series[j].rows[t];
            CHECK(a.ts == b.ts);
            CHECK(std::memcmp(&a.endo, &b.endo, sizeof(double)) == 0);  // %.17g is exact
            CHECK(a.exo == b.exo);
            CHECK(a.label == b.label);
            CHECK(bool(a.ctx.load_level) == bool(b.ctx.load_level));
        }
    }
}

TEST_CASE("window labels: abnormal when a third of the horizon is affected") {
    SyntheticConfig cfg;
    cfg.n_series = 1;
    cfg.series_len = 100;
    cfg.fault.onset_frac = 0.5;
    cfg.fault.affected_fraction = 1.0;
    Dataset ds = generate_synthetic(cfg);
    auto windows = make_windows(ds, 6, 18, 1);
    CHECK(!windows.empty());
    for (const auto& w : windows) {
        // horizon covers rows [off+6, off+24); onset index 50
        const std::int64_t off = (w.t0 - cfg.start_ts) / cfg.step_seconds;
        const std::int64_t overlap =
            std::max<std::int64_t>(0, std::min<std::int64_t>(off + 24, 100) - std::max<std::int64_t>(off + 6, 50));
        if (overlap * 3 >= 18)
            CHECK(w.label == Label::abnormal);
        else if (overlap > 0)
            CHECK(w.label == Label::unlabeled);
        else
            CHECK(w.label == Label::normal);
    }
}
