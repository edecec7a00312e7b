// SPDX-License-Identifier: Apache-2.0
//
// sparse5g: sparse signal processing for one-shot random access and
// compressed CSI feedback.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "sparse5g/scenario.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

using namespace sparse5g::scenario;
namespace fs = std::filesystem;

namespace {

Json small_oneshot() {
    return Json::parse(R"({
        "experiment": "oneshot_ra", "seed": 7, "trials": 12,
        "oneshot": {"n": 256, "m": 32, "n_t": 8, "k0": 2, "n_d": 16, "k1": 2, "k2": 16,
                    "payload_bits": 16, "alpha_grid": [0.3, 0.6], "threshold_grid": [0.01, 0.1]}
    })");
}

fs::path scratch(const std::string &name) {
    const fs::path p = fs::temp_directory_path() / ("sparse5g_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path &p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const fs::path &p) {
    std::vector<std::string> out;
    std::ifstream f(p);
    for (std::string l; std::getline(f, l);) out.push_back(l);
    return out;
}

std::vector<std::string> split(const std::string &s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string c; std::getline(ss, c, ',');) out.push_back(c);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
}

bool mentions(const ConfigError &e, const std::string &needle) {
    for (const auto &d : e.diagnostics())
        if (d.find(needle) != std::string::npos) return true;
    return false;
}

RunResult run_in(const Json &c, const std::string &name, int workers = 1) {
    RunOptions o;
    o.out_dir = scratch(name);
    o.workers = workers;
    return run_scenario(c, o);
}

} // namespace

TEST(Config, DefaultsAreValidAndStable) {
    const Json d = default_config();
    EXPECT_EQ(normalize(d), d);
    EXPECT_EQ(normalize(Json::object()), d);
    EXPECT_EQ(config_hash(d), config_hash(normalize(d)));
    EXPECT_EQ(config_hash(d).size(), 16u);
}

TEST(Config, PartialSectionMergesOntoDefaults) {
    const Json c = normalize(Json::parse(R"({"oneshot": {"m": 64}})"));
    EXPECT_EQ(c["oneshot"]["m"], 64);
    EXPECT_EQ(c["oneshot"]["n"], default_config()["oneshot"]["n"]);
}

TEST(Config, UnknownFieldListsValidFields) {
    try {
        normalize(Json::parse(R"({"oneshot": {"alpah": 0.5}})"));
        FAIL();
    } catch (const ConfigError &e) {
        EXPECT_TRUE(mentions(e, "oneshot.alpah: unknown field"));
        EXPECT_TRUE(mentions(e, "alpha_grid"));
    }
}

TEST(Config, TypeErrorsNameTheField) {
    try {
        normalize(Json::parse(R"({"trials": "many", "cran": {"n": 1.5}, "seckey": {"modes": ["phase", 3]}})"));
        FAIL();
    } catch (const ConfigError &e) {
        EXPECT_TRUE(mentions(e, "trials: expected integer"));
        EXPECT_TRUE(mentions(e, "cran.n: expected integer"));
        EXPECT_TRUE(mentions(e, "seckey.modes[1]"));
        EXPECT_EQ(e.diagnostics().size(), 3u);
    }
}

TEST(Config, ModulePreconditionsCheckedUpFront) {
    auto expect = [](const char *text, const std::string &needle) {
        try {
            normalize(Json::parse(text));
            ADD_FAILURE() << "accepted " << text;
        } catch (const ConfigError &e) {
            EXPECT_TRUE(mentions(e, needle)) << e.what();
        }
    };
    expect(R"({"oneshot": {"m": 4096}})", "oneshot:");
    expect(R"({"oneshot": {"setting": "overlay"}})", "oneshot.setting: expected one of underlay|separated");
    expect(R"({"oneshot": {"alpha_grid": []}})", "oneshot.alpha_grid: must not be empty");
    expect(R"({"oneshot": {"alpha_grid": [0.5, 1.5]}})", "oneshot.alpha_grid");
    expect(R"({"experiment": "fig9"})", "experiment: expected one of");
    expect(R"({"trials": 0})", "trials: must be >= 1");
    expect(R"({"cran": {"iq_bits_grid": [12]}})", "cran.iq_bits_grid");
    expect(R"({"seckey": {"modes": ["swap"]}})", "seckey.modes");
    expect(R"({"cs_codec": {"joint": {"rank": 9}}})", "cs_codec.joint.rank");
    expect(R"({"cs_codec": {"snr_db_grid": ["loud"]}})", "cs_codec.snr_db_grid[0]");
}

TEST(Config, InfinityTokenOnlyForSnrFields) {
    EXPECT_NO_THROW(normalize(Json::parse(R"({"oneshot": {"snr_db": "inf"}})")));
    EXPECT_THROW(normalize(Json::parse(R"({"oneshot": {"alpha": "inf"}})")), ConfigError);
}

TEST(Workers, EnvironmentOverrides) {
    ::unsetenv("SPARSE5G_WORKERS");
    EXPECT_EQ(resolve_workers(3), 3);
    EXPECT_GE(resolve_workers(std::nullopt), 1);
    ::setenv("SPARSE5G_WORKERS", "5", 1);
    EXPECT_EQ(resolve_workers(3), 5);
    ::setenv("SPARSE5G_WORKERS", "zero", 1);
    EXPECT_THROW(resolve_workers(3), std::invalid_argument);
    ::unsetenv("SPARSE5G_WORKERS");
    EXPECT_THROW(resolve_workers(0), std::invalid_argument);
}

TEST(ParallelMap, OrderedByIndexForAnyWorkerCount) {
    std::function<std::size_t(std::size_t)> sq = [](std::size_t i) { return i * i; };
    for (int w : {1, 2, 7, 64}) {
        const auto r = parallel_map<std::size_t>(50, w, sq);
        for (std::size_t i = 0; i < r.size(); ++i) ASSERT_EQ(r[i], i * i);
    }
    EXPECT_TRUE(parallel_map<std::size_t>(0, 4, sq).empty());
}

TEST(ParallelMap, PropagatesTaskErrors) {
    std::function<int(std::size_t)> f = [](std::size_t i) -> int {
        if (i == 13) throw std::runtime_error("boom");
        return 0;
    };
    EXPECT_THROW(parallel_map<int>(40, 4, f), std::runtime_error);
}

TEST(Run, OneshotWritesTablesAndManifest) {
    const auto r = run_in(small_oneshot(), "smoke");
    const fs::path dir = fs::temp_directory_path() / "sparse5g_test_smoke";
    ASSERT_TRUE(fs::exists(dir / "ser_vs_alpha.csv"));
    ASSERT_TRUE(fs::exists(dir / "roc.csv"));
    ASSERT_TRUE(fs::exists(dir / "manifest.json"));

    const auto ser = lines(dir / "ser_vs_alpha.csv");
    ASSERT_EQ(ser.size(), 3u);
    const auto roc = lines(dir / "roc.csv");
    ASSERT_EQ(roc.size(), 5u);
    const std::string hash = config_hash(normalize(small_oneshot()));
    for (const auto *table : {&ser, &roc}) {
        const auto header = split(table->front());
        ASSERT_GE(header.size(), 3u);
        EXPECT_EQ(header[header.size() - 3], "seed");
        EXPECT_EQ(header[header.size() - 2], "trial_count");
        EXPECT_EQ(header.back(), "config_hash");
        for (std::size_t i = 1; i < table->size(); ++i) {
            const auto row = split((*table)[i]);
            ASSERT_EQ(row.size(), header.size()) << (*table)[i];
            EXPECT_EQ(row.back(), hash);
            EXPECT_EQ(row[row.size() - 2], "12");
        }
    }

    const Json m = Json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(m["config"], normalize(small_oneshot()));
    EXPECT_EQ(m["seed"], 7);
    EXPECT_TRUE(m.contains("commit"));
    EXPECT_TRUE(m.contains("wall_time_s"));
    EXPECT_EQ(m["failures"], 0);
    EXPECT_NEAR(m["overhead"].get<double>(), 32.0 / 256.0, 1e-12);
    EXPECT_EQ(r.manifest, m);
}

TEST(Run, SameSeedGivesByteIdenticalTables) {
    run_in(small_oneshot(), "det_a");
    run_in(small_oneshot(), "det_b");
    for (const char *f : {"ser_vs_alpha.csv", "roc.csv"}) {
        const auto a = slurp(fs::temp_directory_path() / "sparse5g_test_det_a" / f);
        EXPECT_FALSE(a.empty());
        EXPECT_EQ(a, slurp(fs::temp_directory_path() / "sparse5g_test_det_b" / f));
    }
}

TEST(Run, WorkerCountInvariance) {
    const std::map<std::string, Json> configs{
        {"oneshot", small_oneshot()},
        {"cran", Json::parse(R"({"experiment": "cran_feedback", "trials": 6,
                    "cran": {"n": 128, "nodes": 2, "antennas_per_node": 2, "users": 3, "n_d": 16,
                             "iq_bits_grid": [2, 4]}})")},
        {"seckey", Json::parse(R"({"experiment": "seckey", "trials": 6,
                    "seckey": {"magnitude_grid": [1.0], "entropy_k1_grid": [2]}})")},
        {"cs", Json::parse(R"({"experiment": "cs_codec", "trials": 4,
                    "cs_codec": {"n": 64, "k": 2, "m_factor_grid": [1, 2],
                                 "joint": {"n": 32, "sensors": 3, "rank": 1, "pool": 6, "m": 20,
                                           "modes": ["independent", "lowrank"], "trials": 2}}})")}};
    for (const auto &[name, cfg] : configs) {
        const auto one = run_in(cfg, "w1_" + name, 1);
        const auto four = run_in(cfg, "w4_" + name, 4);
        ASSERT_EQ(one.tables.size(), four.tables.size());
        for (const auto &t : one.tables) {
            const auto a = slurp(fs::temp_directory_path() / ("sparse5g_test_w1_" + name) / (t.name + ".csv"));
            const auto b = slurp(fs::temp_directory_path() / ("sparse5g_test_w4_" + name) / (t.name + ".csv"));
            EXPECT_GT(a.size(), 0u) << name;
            EXPECT_EQ(a, b) << name << "/" << t.name;
        }
    }
}

TEST(Run, SeedOverrideChangesResultsAndHash) {
    RunOptions o;
    o.out_dir = scratch("override");
    o.seed_override = 99;
    const auto r = run_scenario(small_oneshot(), o);
    EXPECT_EQ(r.manifest["seed"], 99);
    EXPECT_NE(r.manifest["config_hash"], config_hash(normalize(small_oneshot())));
}

TEST(Run, InvalidConfigRejectedBeforeWriting) {
    RunOptions o;
    o.out_dir = scratch("invalid");
    Json c = small_oneshot();
    c["oneshot"]["k0"] = 100;
    EXPECT_THROW(run_scenario(c, o), ConfigError);
    EXPECT_FALSE(fs::exists(o.out_dir));
}

TEST(Sweep, OneRowGroupPerValue) {
    RunOptions o;
    o.out_dir = scratch("sweep");
    const std::vector<double> alphas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    Json c = small_oneshot();
    c["trials"] = 2;
    sweep(c, "oneshot.alpha", alphas, o);
    const auto rows = lines(o.out_dir / "sweep.csv");
    ASSERT_EQ(rows.size(), 10u);
    const auto header = split(rows[0]);
    EXPECT_EQ(header[0], "parameter");
    EXPECT_EQ(header[1], "value");
    std::set<std::string> seeds;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto r = split(rows[i]);
        EXPECT_EQ(r[0], "oneshot.alpha");
        EXPECT_EQ(r[1], r[2]); // swept value lands in the alpha column
        seeds.insert(r[r.size() - 3]);
    }
    EXPECT_EQ(seeds.size(), alphas.size());
}

TEST(Sweep, ReorderedValuesGiveSameRows) {
    Json c = small_oneshot();
    c["trials"] = 4;
    RunOptions a, b;
    a.out_dir = scratch("sweep_a");
    b.out_dir = scratch("sweep_b");
    sweep(c, "oneshot.snr_db", {5.0, 15.0, 25.0}, a);
    sweep(c, "oneshot.snr_db", {25.0, 5.0, 15.0}, b);
    auto ra = lines(a.out_dir / "sweep.csv");
    auto rb = lines(b.out_dir / "sweep.csv");
    EXPECT_EQ(ra.front(), rb.front());
    std::multiset<std::string> sa(ra.begin() + 1, ra.end()), sb(rb.begin() + 1, rb.end());
    EXPECT_EQ(sa, sb);
    EXPECT_NE(ra, rb);
}

TEST(Sweep, Rejections) {
    RunOptions o;
    o.out_dir = scratch("sweep_bad");
    try {
        sweep(small_oneshot(), "oneshot.alpah", {0.5}, o);
        FAIL();
    } catch (const ConfigError &e) {
        EXPECT_TRUE(mentions(e, "valid: "));
        EXPECT_TRUE(mentions(e, "oneshot.alpha"));
    }
    try {
        sweep(small_oneshot(), "oneshot.alpha", {}, o);
        FAIL();
    } catch (const ConfigError &e) {
        EXPECT_TRUE(mentions(e, "empty value list"));
    }
    EXPECT_THROW(sweep(small_oneshot(), "oneshot.setting", {1.0}, o), ConfigError);
    EXPECT_THROW(sweep(small_oneshot(), "oneshot.n_t", {8.5}, o), ConfigError);
    EXPECT_THROW(sweep(small_oneshot(), "oneshot.m", {10000}, o), ConfigError);
    EXPECT_FALSE(fs::exists(o.out_dir / "sweep.csv"));
}

TEST(Sweep, FieldListCoversNestedNumbers) {
    const auto f = sweepable_fields(default_config());
    auto has = [&](const std::string &s) { return std::find(f.begin(), f.end(), s) != f.end(); };
    EXPECT_TRUE(has("oneshot.alpha"));
    EXPECT_TRUE(has("cran.iq_bits"));
    EXPECT_TRUE(has("seckey.magnitude"));
    EXPECT_TRUE(has("cs_codec.joint.m"));
    EXPECT_FALSE(has("seed"));
    EXPECT_FALSE(has("oneshot.setting"));
}

TEST(Scenarios, BundledConfigsValidate) {
    const auto names = list_scenarios(SPARSE5G_SCENARIO_DIR);
    for (const char *expected : {"desk_oneshot", "paper_oneshot", "cran", "seckey", "cs_codec"})
        EXPECT_NE(std::find(names.begin(), names.end(), expected), names.end()) << expected;
    for (const auto &n : names) EXPECT_NO_THROW(normalize(load_config(n, SPARSE5G_SCENARIO_DIR))) << n;
}

TEST(Scenarios, PaperFrameOverhead) {
    const Json c = normalize(load_config("paper_oneshot", SPARSE5G_SCENARIO_DIR));
    EXPECT_EQ(c["oneshot"]["n"], 24576);
    EXPECT_EQ(c["oneshot"]["m"], 839);
    EXPECT_LT(839.0 / 24576.0, 0.05);
}

TEST(Scenarios, MissingFileIsConfigError) {
    EXPECT_THROW(load_config("no_such_scenario", SPARSE5G_SCENARIO_DIR), ConfigError);
}

TEST(Format, Numbers) {
    EXPECT_EQ(format_number(0.5), "0.5");
    EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
    EXPECT_EQ(format_number(1.0 / 3.0), "0.3333333333");
}
