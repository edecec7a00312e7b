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

#include "sparse5g/airmodel.hpp"
#include "sparse5g/cran_feedback.hpp"
#include "sparse5g/cs_codec.hpp"
#include "sparse5g/metrics.hpp"
#include "sparse5g/oneshot_ra.hpp"
#include "sparse5g/seckey.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#ifndef SPARSE5G_COMMIT
#define SPARSE5G_COMMIT "unknown"
#endif

namespace sparse5g::scenario {

using airmodel::Rng;
using Diags = std::vector<std::string>;

namespace {

std::string join(const std::vector<std::string> &parts, const std::string &sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
    return out;
}

// ---------------------------------------------------------------------------
// Defaults and structural checks
// ---------------------------------------------------------------------------

Json oneshot_defaults() {
    const oneshot_ra::OneshotConfig c;
    const auto &f = c.frame;
    return Json{{"n", f.n},
                {"m", f.m},
                {"n_t", f.n_t},
                {"n_r", f.n_r},
                {"n_d", f.n_d},
                {"k0", f.k0},
                {"k1", f.k1},
                {"k2", f.k2},
                {"alpha", f.alpha},
                {"snr_db", f.snr_db},
                {"payload_bits", f.payload_bits},
                {"setting", "underlay"},
                {"layout", "comb"},
                {"support", "common"},
                {"detector", "cs"},
                {"solver", "omp"},
                {"threshold", c.threshold},
                {"plan_seed", c.plan_seed},
                {"refine_passes", c.refine_passes},
                {"alpha_grid", {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}},
                {"threshold_grid", {0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5}}};
}

Json cran_defaults() {
    const cran_feedback::CranConfig c;
    return Json{{"n", c.n},
                {"nodes", c.nodes},
                {"antennas_per_node", c.antennas_per_node},
                {"users", c.users},
                {"n_d", c.n_d},
                {"k1", c.k1},
                {"snr1_db", c.snr1_db},
                {"snr2_db", c.snr2_db},
                {"rate_snr_db", c.rate_snr_db},
                {"rate_subcarriers", c.rate_subcarriers},
                {"analog_bits", c.analog_bits},
                {"recovery", "omp"},
                {"plan_seed", c.plan_seed},
                {"iq_bits", 4},
                {"iq_bits_grid", {1, 2, 3, 4, 5, 6, 7, 8}},
                {"degradation_snr_db_grid", {0.0, 10.0, 20.0, 30.0}}};
}

Json seckey_defaults() {
    const seckey::SeckeyConfig c;
    return Json{{"n", c.n},
                {"n_d", c.n_d},
                {"antennas", c.antennas},
                {"k1", c.k1},
                {"m_fb", c.m_fb},
                {"snr1_db", c.snr1_db},
                {"snr2_db", c.snr2_db},
                {"bits_per_tap", c.bits_per_tap},
                {"recovery", "omp"},
                {"plan_seed", c.plan_seed},
                {"magnitude", 1.0},
                {"magnitude_grid", {0.25, 0.5, 0.75, 1.0}},
                {"modes", {"phase", "rank_one"}},
                {"equal_energy", true},
                {"entropy_k1_grid", {1, 2, 3, 4, 5}}};
}

Json cs_codec_defaults() {
    return Json{{"n", 256},
                {"k", 8},
                {"c", 4.0},
                {"m_factor", 1.0},
                {"m_factor_grid", {1.0, 1.5, 2.0}},
                {"snr_db", 20.0},
                {"snr_db_grid", {"inf", 20.0}},
                {"joint",
                 {{"n", 128},
                  {"sensors", 8},
                  {"rank", 2},
                  {"pool", 48},
                  {"m", 80},
                  {"snr_db", "inf"},
                  {"modes", {"independent", "sequential_diff", "lowrank"}},
                  {"trials", 5}}}};
}

bool snr_field(const std::string &key) { return key.find("snr") != std::string::npos; }

bool is_inf_token(const Json &v) { return v.is_string() && v.get<std::string>() == "inf"; }

std::string kind(const Json &v) {
    if (v.is_boolean()) return "boolean";
    if (v.is_number_integer()) return "integer";
    if (v.is_number()) return "number";
    if (v.is_string()) return "string";
    if (v.is_array()) return "array";
    if (v.is_object()) return "section";
    return "null";
}

// Checks one scalar against the type of its default; returns the value to
// store (integral floats are narrowed to integers).
std::optional<Json> check_scalar(const Json &def, const Json &val, const std::string &key,
                                 const std::string &path, Diags &diags) {
    const bool snr = snr_field(key);
    if (snr) {
        if (val.is_number() || is_inf_token(val)) return val;
    } else if (def.is_boolean()) {
        if (val.is_boolean()) return val;
    } else if (def.is_number_integer()) {
        if (val.is_number_integer()) return val;
        if (val.is_number_float()) {
            const double d = val.get<double>();
            if (std::isfinite(d) && d == std::floor(d)) return Json(static_cast<std::int64_t>(d));
            diags.push_back(path + ": expected integer, got " + val.dump());
            return std::nullopt;
        }
    } else if (def.is_number()) {
        if (val.is_number()) return val;
    } else if (def.is_string()) {
        if (val.is_string()) return val;
    }
    diags.push_back(path + ": expected " + (snr ? "number or \"inf\"" : kind(def)) + ", got " +
                    kind(val));
    return std::nullopt;
}

void merge_checked(Json &target, const Json &user, const std::string &prefix, Diags &diags) {
    if (!user.is_object()) {
        diags.push_back((prefix.empty() ? std::string("config") : prefix) +
                        ": expected section, got " + kind(user));
        return;
    }
    for (const auto &[key, val] : user.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (!target.contains(key)) {
            std::vector<std::string> valid;
            for (const auto &[k, _] : target.items()) valid.push_back(k);
            diags.push_back(path + ": unknown field (valid: " + join(valid, ", ") + ")");
            continue;
        }
        Json &def = target[key];
        if (def.is_object()) {
            merge_checked(def, val, path, diags);
        } else if (def.is_array()) {
            if (!val.is_array()) {
                diags.push_back(path + ": expected array, got " + kind(val));
                continue;
            }
            const Json proto = def.empty() ? Json() : def.front();
            Json out = Json::array();
            bool ok = true;
            for (std::size_t i = 0; i < val.size(); ++i) {
                const std::string ep = path + "[" + std::to_string(i) + "]";
                auto v = proto.is_null() ? std::optional<Json>(val[i])
                                         : check_scalar(proto, val[i], key, ep, diags);
                if (!v) ok = false;
                else out.push_back(*v);
            }
            if (ok) def = out;
        } else if (auto v = check_scalar(def, val, key, path, diags)) {
            def = *v;
        }
    }
}

// ---------------------------------------------------------------------------
// Typed sections
// ---------------------------------------------------------------------------

double num(const Json &v) {
    return is_inf_token(v) ? std::numeric_limits<double>::infinity() : v.get<double>();
}

template <class E>
E parse_enum(const Json &sec, const std::string &key, const std::string &path,
             const std::vector<std::pair<std::string, E>> &options, Diags &diags) {
    const std::string s = sec.at(key).get<std::string>();
    std::vector<std::string> names;
    for (const auto &[name, value] : options) {
        if (name == s) return value;
        names.push_back(name);
    }
    diags.push_back(path + "." + key + ": expected one of " + join(names, "|") + ", got \"" + s +
                    "\"");
    return options.front().second;
}

std::vector<double> numbers(const Json &arr) {
    std::vector<double> out;
    for (const auto &v : arr) out.push_back(num(v));
    return out;
}

void check_grid(const std::vector<double> &g, const std::string &path, Diags &diags) {
    if (g.empty()) {
        diags.push_back(path + ": must not be empty");
        return;
    }
    std::vector<double> s = g;
    std::sort(s.begin(), s.end());
    if (std::adjacent_find(s.begin(), s.end()) != s.end())
        diags.push_back(path + ": duplicate values");
}

template <class F>
void guard(const std::string &path, Diags &diags, F &&fn) {
    try {
        fn();
    } catch (const std::exception &e) {
        diags.push_back(path + ": " + e.what());
    }
}

struct OneshotSection {
    oneshot_ra::OneshotConfig config;
    std::vector<double> alpha_grid;
    std::vector<double> threshold_grid;
};

OneshotSection parse_oneshot(const Json &s, Diags &diags) {
    using namespace oneshot_ra;
    const std::string p = "oneshot";
    OneshotSection out;
    auto &c = out.config;
    auto &f = c.frame;
    f.n = s["n"].get<Index>();
    f.m = s["m"].get<Index>();
    f.n_t = s["n_t"].get<Index>();
    f.n_r = s["n_r"].get<Index>();
    f.n_d = s["n_d"].get<Index>();
    f.k0 = s["k0"].get<Index>();
    f.k1 = s["k1"].get<Index>();
    f.k2 = s["k2"].get<Index>();
    f.alpha = s["alpha"].get<double>();
    f.snr_db = num(s["snr_db"]);
    f.payload_bits = s["payload_bits"].get<Index>();
    c.setting = parse_enum<PilotSetting>(
        s, "setting", p, {{"underlay", PilotSetting::underlay}, {"separated", PilotSetting::separated}},
        diags);
    c.layout = parse_enum<WindowLayout>(s, "layout", p,
                                        {{"comb", WindowLayout::comb},
                                         {"contiguous", WindowLayout::contiguous},
                                         {"random", WindowLayout::random}},
                                        diags);
    c.support = parse_enum<airmodel::SupportMode>(
        s, "support", p,
        {{"common", airmodel::SupportMode::common}, {"independent", airmodel::SupportMode::independent}},
        diags);
    c.detector = parse_enum<Detector>(
        s, "detector", p, {{"cs", Detector::cs}, {"correlation", Detector::correlation}}, diags);
    c.solver = parse_enum<ChannelSolver>(
        s, "solver", p, {{"omp", ChannelSolver::omp}, {"bpdn", ChannelSolver::bpdn}}, diags);
    c.threshold = s["threshold"].get<double>();
    c.plan_seed = s["plan_seed"].get<std::uint64_t>();
    c.refine_passes = s["refine_passes"].get<int>();
    out.alpha_grid = numbers(s["alpha_grid"]);
    out.threshold_grid = numbers(s["threshold_grid"]);
    guard(p, diags, [&] { c.validate(); });
    check_grid(out.alpha_grid, p + ".alpha_grid", diags);
    check_grid(out.threshold_grid, p + ".threshold_grid", diags);
    for (double a : out.alpha_grid)
        guard(p + ".alpha_grid", diags, [&] {
            auto cc = c;
            cc.frame.alpha = a;
            cc.validate();
        });
    for (double t : out.threshold_grid)
        if (!(t >= 0.0)) diags.push_back(p + ".threshold_grid: values must be >= 0");
    return out;
}

cran_feedback::Recovery parse_recovery(const Json &s, const std::string &p, Diags &diags) {
    return parse_enum<cran_feedback::Recovery>(
        s, "recovery", p, {{"omp", cran_feedback::Recovery::omp}, {"bpdn", cran_feedback::Recovery::bpdn}},
        diags);
}

struct CranSection {
    cran_feedback::CranConfig config;
    std::vector<double> iq_bits_grid;
    std::vector<double> degradation_snr_db_grid;
};

Index equal_load_mfb(const cran_feedback::CranConfig &c, int b) {
    return static_cast<Index>(
        std::llround(cran_feedback::iq_load_bits(c, b) / (2.0 * c.analog_bits)));
}

CranSection parse_cran(const Json &s, Diags &diags) {
    const std::string p = "cran";
    CranSection out;
    auto &c = out.config;
    c.n = s["n"].get<Index>();
    c.nodes = s["nodes"].get<Index>();
    c.antennas_per_node = s["antennas_per_node"].get<Index>();
    c.users = s["users"].get<Index>();
    c.n_d = s["n_d"].get<Index>();
    c.k1 = s["k1"].get<Index>();
    c.snr1_db = num(s["snr1_db"]);
    c.snr2_db = num(s["snr2_db"]);
    c.rate_snr_db = num(s["rate_snr_db"]);
    c.rate_subcarriers = s["rate_subcarriers"].get<Index>();
    c.analog_bits = s["analog_bits"].get<int>();
    c.recovery = parse_recovery(s, p, diags);
    c.plan_seed = s["plan_seed"].get<std::uint64_t>();
    out.iq_bits_grid = numbers(s["iq_bits_grid"]);
    out.degradation_snr_db_grid = numbers(s["degradation_snr_db_grid"]);
    guard(p, diags, [&] { c.validate(); });
    check_grid(out.iq_bits_grid, p + ".iq_bits_grid", diags);
    for (double b : out.iq_bits_grid) {
        if (b < 1 || b > 16) {
            diags.push_back(p + ".iq_bits_grid: values must lie in [1, 16]");
            continue;
        }
        const Index m = equal_load_mfb(c, static_cast<int>(b));
        if (c.analog_bits >= 1 && (m < 1 || m > c.n))
            diags.push_back(p + ".iq_bits_grid: b=" + format_number(b) +
                            " needs m_fb=" + std::to_string(m) + " outside [1, n]");
    }
    return out;
}

struct SeckeySection {
    seckey::SeckeyConfig config;
    std::vector<double> magnitude_grid;
    std::vector<airmodel::PerturbMode> modes;
    bool equal_energy = true;
    std::vector<double> entropy_k1_grid;
};

SeckeySection parse_seckey(const Json &s, Diags &diags) {
    const std::string p = "seckey";
    SeckeySection out;
    auto &c = out.config;
    c.n = s["n"].get<Index>();
    c.n_d = s["n_d"].get<Index>();
    c.antennas = s["antennas"].get<Index>();
    c.k1 = s["k1"].get<Index>();
    c.m_fb = s["m_fb"].get<Index>();
    c.snr1_db = num(s["snr1_db"]);
    c.snr2_db = num(s["snr2_db"]);
    c.bits_per_tap = s["bits_per_tap"].get<int>();
    c.recovery = parse_recovery(s, p, diags);
    c.plan_seed = s["plan_seed"].get<std::uint64_t>();
    out.magnitude_grid = numbers(s["magnitude_grid"]);
    out.equal_energy = s["equal_energy"].get<bool>();
    out.entropy_k1_grid = numbers(s["entropy_k1_grid"]);
    std::set<std::string> seen;
    for (const auto &m : s["modes"]) {
        const std::string name = m.get<std::string>();
        if (!seen.insert(name).second) diags.push_back(p + ".modes: duplicate \"" + name + "\"");
        if (name == "phase") out.modes.push_back(airmodel::PerturbMode::phase);
        else if (name == "rank_one") out.modes.push_back(airmodel::PerturbMode::rank_one);
        else diags.push_back(p + ".modes: expected phase|rank_one, got \"" + name + "\"");
    }
    if (out.modes.empty() && seen.empty()) diags.push_back(p + ".modes: must not be empty");
    guard(p, diags, [&] { c.validate(); });
    check_grid(out.magnitude_grid, p + ".magnitude_grid", diags);
    for (double m : out.magnitude_grid)
        if (!(m >= 0.0)) diags.push_back(p + ".magnitude_grid: values must be >= 0");
    check_grid(out.entropy_k1_grid, p + ".entropy_k1_grid", diags);
    for (double k : out.entropy_k1_grid)
        if (k < 1 || k > c.n_d) diags.push_back(p + ".entropy_k1_grid: values must lie in [1, n_d]");
    return out;
}

struct JointSection {
    Index n = 0, sensors = 0, rank = 0, pool = 0, m = 0, trials = 0;
    double snr_db = 0.0;
    std::vector<cs_codec::JointMode> modes;
};

struct CsSection {
    Index n = 0, k = 0;
    double c = 4.0;
    std::vector<double> m_factor_grid;
    std::vector<double> snr_db_grid;
    JointSection joint;
};

CsSection parse_cs(const Json &s, Diags &diags) {
    const std::string p = "cs_codec";
    CsSection out;
    out.n = s["n"].get<Index>();
    out.k = s["k"].get<Index>();
    out.c = s["c"].get<double>();
    out.m_factor_grid = numbers(s["m_factor_grid"]);
    out.snr_db_grid = numbers(s["snr_db_grid"]);
    if (out.n < 2) diags.push_back(p + ".n: must be >= 2");
    if (out.k < 1 || out.k >= out.n) diags.push_back(p + ".k: must lie in [1, n)");
    if (!(out.c > 0.0)) diags.push_back(p + ".c: must be > 0");
    check_grid(out.m_factor_grid, p + ".m_factor_grid", diags);
    check_grid(out.snr_db_grid, p + ".snr_db_grid", diags);
    if (diags.empty())
        for (double f : out.m_factor_grid) {
            const double m = std::ceil(f * double(cs_codec::min_measurements(out.n, out.k, out.c)));
            if (!(f > 0.0) || m < 1 || m > double(out.n))
                diags.push_back(p + ".m_factor_grid: factor " + format_number(f) +
                                " gives m outside [1, n]");
        }
    const Json &j = s["joint"];
    auto &J = out.joint;
    J.n = j["n"].get<Index>();
    J.sensors = j["sensors"].get<Index>();
    J.rank = j["rank"].get<Index>();
    J.pool = j["pool"].get<Index>();
    J.m = j["m"].get<Index>();
    J.trials = j["trials"].get<Index>();
    J.snr_db = num(j["snr_db"]);
    const std::string jp = p + ".joint";
    if (J.n < 2) diags.push_back(jp + ".n: must be >= 2");
    if (J.sensors < 1) diags.push_back(jp + ".sensors: must be >= 1");
    if (J.rank < 1 || J.rank > J.sensors) diags.push_back(jp + ".rank: must lie in [1, sensors]");
    if (J.pool < J.rank || J.pool > J.n) diags.push_back(jp + ".pool: must lie in [rank, n]");
    if (J.m < 1 || J.m > J.n) diags.push_back(jp + ".m: must lie in [1, n]");
    if (J.trials < 0) diags.push_back(jp + ".trials: must be >= 0");
    std::set<std::string> seen;
    for (const auto &m : j["modes"]) {
        const std::string name = m.get<std::string>();
        if (!seen.insert(name).second) diags.push_back(jp + ".modes: duplicate \"" + name + "\"");
        using cs_codec::JointMode;
        if (name == "independent") J.modes.push_back(JointMode::independent);
        else if (name == "lowrank") J.modes.push_back(JointMode::lowrank);
        else if (name == "lowrank_sparse") J.modes.push_back(JointMode::lowrank_sparse);
        else if (name == "sequential_diff") J.modes.push_back(JointMode::sequential_diff);
        else
            diags.push_back(jp + ".modes: expected independent|lowrank|lowrank_sparse|sequential_diff, got \"" +
                            name + "\"");
    }
    return out;
}

const std::vector<std::pair<std::string, std::string>> kExperiments{
    {"oneshot_ra", "oneshot"}, {"cran_feedback", "cran"}, {"seckey", "seckey"}, {"cs_codec", "cs_codec"}};

// Sorted-order rank of each grid value.
std::vector<std::size_t> sorted_rank(const std::vector<double> &g) {
    std::vector<std::size_t> idx(g.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return g[a] < g[b]; });
    std::vector<std::size_t> rank(g.size());
    for (std::size_t r = 0; r < idx.size(); ++r) rank[idx[r]] = r;
    return rank;
}

std::vector<double> sorted(std::vector<double> g) {
    std::sort(g.begin(), g.end());
    return g;
}

std::string fmt_opt(const std::optional<double> &v) { return v ? format_number(*v) : ""; }

struct Context {
    Json config;
    std::string hash;
    std::uint64_t seed = 0;
    long trials = 0;
    int workers = 1;
};

void add_tail(std::vector<std::string> &row, const Context &ctx, std::uint64_t seed, long trials) {
    row.push_back(std::to_string(seed));
    row.push_back(std::to_string(trials));
    row.push_back(ctx.hash);
}

const std::vector<std::string> kTail{"seed", "trial_count", "config_hash"};

std::vector<std::string> with_tail(std::vector<std::string> h) {
    h.insert(h.end(), kTail.begin(), kTail.end());
    return h;
}

struct Outcome {
    std::vector<Table> tables;
    Json extras = Json::object();
    long failures = 0;
};

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

Outcome run_oneshot(const Context &ctx) {
    Diags d;
    const OneshotSection sec = parse_oneshot(ctx.config["oneshot"], d);
    Outcome out;
    Table ser{"ser_vs_alpha",
              with_tail({"alpha", "setting", "snr_db", "ser", "ser_lo", "ser_hi", "genie_ser", "p_fd",
                         "p_md", "channel_mse", "channel_mse_se", "overhead", "failures"}),
              {}};
    Table roc{"roc",
              with_tail({"alpha", "threshold", "p_fd", "p_fd_lo", "p_fd_hi", "p_md", "p_md_lo", "p_md_hi",
                         "inactive_exposures", "active_exposures"}),
              {}};
    const auto alphas = sorted(sec.alpha_grid);
    const auto thresholds = sorted(sec.threshold_grid);
    double overhead = 0.0;
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        auto cfg = sec.config;
        cfg.frame.alpha = alphas[i];
        const auto plan = oneshot_ra::make_plan(cfg);
        overhead = plan.overhead();
        const std::uint64_t point = Rng::derive(ctx.seed, i);
        const auto trials = parallel_map<oneshot_ra::TrialResult>(
            static_cast<std::size_t>(ctx.trials), ctx.workers,
            [&](std::size_t t) { return oneshot_ra::run_trial(cfg, plan, Rng::derive(point, t)); });

        metrics::SymbolTally sym, genie;
        metrics::DetectionTally det;
        std::vector<double> mse;
        long failures = 0;
        for (const auto &r : trials) {
            sym.merge(r.symbols);
            genie.merge(r.genie_symbols);
            det.record(r.detected, r.active, cfg.frame.n_t);
            if (auto m = r.channel_mse()) mse.push_back(*m);
            if (!r.converged || !r.diagnostics.empty()) ++failures;
        }
        out.failures += failures;
        const auto ci = metrics::wilson_interval(sym.errors, sym.symbols);
        const auto rates = metrics::detection_rates(det);
        const auto ms = metrics::summarize(mse);
        std::vector<std::string> row{format_number(alphas[i]), oneshot_ra::to_string(cfg.setting),
                                     format_number(cfg.frame.snr_db), fmt_opt(sym.rate()),
                                     sym.symbols ? format_number(ci.lo) : "",
                                     sym.symbols ? format_number(ci.hi) : "", fmt_opt(genie.rate()),
                                     format_number(rates.p_fd.value), format_number(rates.p_md.value),
                                     mse.empty() ? "" : format_number(ms.mean),
                                     mse.empty() ? "" : format_number(ms.stderr_),
                                     format_number(overhead), std::to_string(failures)};
        add_tail(row, ctx, point, ctx.trials);
        ser.rows.push_back(row);

        for (double thr : thresholds) {
            metrics::DetectionTally tally;
            for (const auto &r : trials) {
                const auto detected = r.scores.empty() ? r.detected : oneshot_ra::apply_threshold(r.scores, thr);
                tally.record(detected, r.active, cfg.frame.n_t);
            }
            const auto rr = metrics::detection_rates(tally);
            std::vector<std::string> rrow{format_number(alphas[i]), format_number(thr),
                                          format_number(rr.p_fd.value), format_number(rr.p_fd.ci.lo),
                                          format_number(rr.p_fd.ci.hi), format_number(rr.p_md.value),
                                          format_number(rr.p_md.ci.lo), format_number(rr.p_md.ci.hi),
                                          std::to_string(tally.inactive_exposures),
                                          std::to_string(tally.active_exposures)};
            add_tail(rrow, ctx, point, ctx.trials);
            roc.rows.push_back(rrow);
        }
    }
    out.extras["overhead"] = overhead;
    out.tables = {ser, roc};
    return out;
}

Outcome run_cran(const Context &ctx) {
    using namespace cran_feedback;
    Diags d;
    const CranSection sec = parse_cran(ctx.config["cran"], d);
    const auto &cfg = sec.config;
    Outcome out;
    Table rates{"rates",
                with_tail({"iq_bits", "load_bits", "m_fb", "cs_load_bits", "scheme", "mean_rate", "rate_se",
                           "channel_mse", "failures"}),
                {}};
    const auto grid = sorted(sec.iq_bits_grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const int b = static_cast<int>(grid[i]);
        const Index m_fb = equal_load_mfb(cfg, b);
        const CranPlan plan = make_cran_plan(cfg, m_fb);
        const std::uint64_t point = Rng::derive(ctx.seed, i);
        const auto trials = parallel_map<std::optional<CranTrial>>(
            static_cast<std::size_t>(ctx.trials), ctx.workers,
            [&](std::size_t t) -> std::optional<CranTrial> {
                try {
                    return run_cran_trial(cfg, plan, b, Rng::derive(point, t));
                } catch (const std::exception &) {
                    return std::nullopt;
                }
            });
        std::vector<double> genie, cs, iq, zero, mcs, miq;
        long failures = 0;
        for (const auto &r : trials) {
            if (!r) {
                ++failures;
                continue;
            }
            if (!r->converged) ++failures;
            genie.push_back(r->rate_genie);
            cs.push_back(r->rate_cs);
            iq.push_back(r->rate_iq);
            zero.push_back(r->rate_zero);
            mcs.push_back(r->mse_cs);
            miq.push_back(r->mse_iq);
        }
        out.failures += failures;
        auto emit = [&](const std::string &scheme, const std::vector<double> &r, const std::vector<double> *mse) {
            const auto s = metrics::summarize(r);
            std::vector<std::string> row{std::to_string(b), format_number(iq_load_bits(cfg, b)),
                                         std::to_string(m_fb), format_number(cs_load_bits(cfg, m_fb)),
                                         scheme, r.empty() ? "" : format_number(s.mean),
                                         r.empty() ? "" : format_number(s.stderr_),
                                         mse && !mse->empty() ? format_number(metrics::summarize(*mse).mean) : "",
                                         std::to_string(failures)};
            add_tail(row, ctx, point, ctx.trials);
            rates.rows.push_back(row);
        };
        emit("genie", genie, nullptr);
        emit("cs", cs, &mcs);
        emit("iq", iq, &miq);
        emit("zero", zero, nullptr);
    }

    Table deg{"degradation", with_tail({"regime", "snr_db", "iq_bits", "n_t", "delta_r"}), {}};
    const double n_t = double(cfg.transmit_antennas());
    for (Regime regime : {Regime::dof, Regime::finite_snr})
        for (double p_db : sorted(sec.degradation_snr_db_grid))
            for (double b : grid) {
                const double p = std::pow(10.0, p_db / 10.0);
                std::vector<std::string> row{to_string(regime), format_number(p_db), format_number(b),
                                             format_number(n_t),
                                             format_number(degradation(p, b, cfg.transmit_antennas(), regime))};
                add_tail(row, ctx, ctx.seed, 0);
                deg.rows.push_back(row);
            }
    out.tables = {rates, deg};
    return out;
}

Outcome run_seckey(const Context &ctx) {
    Diags d;
    const SeckeySection sec = parse_seckey(ctx.config["seckey"], d);
    const auto &cfg = sec.config;
    const auto plan = cran_feedback::make_cran_plan(cfg.network(), cfg.m_fb);
    Outcome out;
    Table tab{"seckey",
              with_tail({"mode", "magnitude", "applied_magnitude", "mse_bob", "mse_eve", "mse_ratio", "kdr_bob",
                         "kdr_eve", "key_bits", "key_entropy", "eve_empty_keys", "failures"}),
              {}};
    const auto grid = sorted(sec.magnitude_grid);
    for (auto mode : sec.modes)
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double applied = mode == airmodel::PerturbMode::rank_one && sec.equal_energy
                                       ? seckey::equal_energy_rank_one(grid[i])
                                       : grid[i];
            const std::uint64_t point = Rng::derive(ctx.seed, i);
            const auto trials = parallel_map<std::optional<seckey::KeygenResult>>(
                static_cast<std::size_t>(ctx.trials), ctx.workers,
                [&](std::size_t t) -> std::optional<seckey::KeygenResult> {
                    try {
                        return seckey::keygen_experiment(cfg, plan, mode, applied, Rng::derive(point, t));
                    } catch (const std::exception &) {
                        return std::nullopt;
                    }
                });
            std::vector<double> mb, me, kb, ke;
            std::vector<airmodel::Bits> keys;
            long failures = 0, empty = 0;
            for (const auto &r : trials) {
                if (!r) {
                    ++failures;
                    continue;
                }
                if (!r->converged) ++failures;
                empty += r->eve_key_empty;
                mb.push_back(r->mse_bob);
                me.push_back(r->mse_eve);
                kb.push_back(r->kdr_bob);
                ke.push_back(r->kdr_eve);
                keys.push_back(r->reference_key);
            }
            out.failures += failures;
            auto mean = [](const std::vector<double> &v) {
                return v.empty() ? std::string() : format_number(metrics::summarize(v).mean);
            };
            const double bob = mb.empty() ? 0.0 : metrics::summarize(mb).mean;
            const double eve = me.empty() ? 0.0 : metrics::summarize(me).mean;
            const std::size_t key_bits = keys.empty() ? 0 : keys.front().size();
            std::vector<std::string> row{mode == airmodel::PerturbMode::phase ? "phase" : "rank_one", format_number(grid[i]),
                                         format_number(applied), mean(mb), mean(me),
                                         bob > 0.0 ? format_number(eve / bob) : "", mean(kb), mean(ke),
                                         std::to_string(key_bits),
                                         keys.empty() ? "" : format_number(seckey::key_entropy(keys)),
                                         std::to_string(empty), std::to_string(failures)};
            add_tail(row, ctx, point, ctx.trials);
            tab.rows.push_back(row);
        }

    Table ent{"key_entropy", with_tail({"k1", "bits_per_tap", "key_bits", "key_entropy"}), {}};
    const auto kgrid = sorted(sec.entropy_k1_grid);
    for (std::size_t i = 0; i < kgrid.size(); ++i) {
        const Index k1 = static_cast<Index>(kgrid[i]);
        const std::uint64_t point = Rng::derive(ctx.seed, 0x6b657900 + i);
        const auto keys = parallel_map<airmodel::Bits>(
            static_cast<std::size_t>(ctx.trials), ctx.workers, [&](std::size_t t) {
                Rng rng = Rng::stream(Rng::derive(point, t), 1);
                const CMat H = airmodel::gen_sparse_cir(rng, cfg.n_d, cfg.antennas, k1,
                                                        airmodel::SupportMode::common);
                return seckey::key_from_channel(H, k1, cfg.bits_per_tap).bits;
            });
        std::vector<std::string> row{std::to_string(k1), std::to_string(cfg.bits_per_tap),
                                     std::to_string(keys.empty() ? 0 : keys.front().size()),
                                     format_number(seckey::key_entropy(keys))};
        add_tail(row, ctx, point, ctx.trials);
        ent.rows.push_back(row);
    }
    out.tables = {tab, ent};
    return out;
}

struct CsTrial {
    double mse = 0.0;
    bool exact = false;
    bool converged = true;
};

Outcome run_cs(const Context &ctx) {
    using namespace cs_codec;
    Diags d;
    const CsSection sec = parse_cs(ctx.config["cs_codec"], d);
    Outcome out;
    Table tab{"cs_codec",
              with_tail({"mode", "n", "k", "sensors", "m", "snr_db", "mse", "mse_se", "exact_rate", "failures"}),
              {}};
    const Index m_min = min_measurements(sec.n, sec.k, sec.c);
    const auto snrs = sorted(sec.snr_db_grid);
    const auto factors = sorted(sec.m_factor_grid);
    auto fold = [&](const std::string &mode, Index n, Index k, Index sensors, Index m, double snr,
                    const std::vector<std::optional<CsTrial>> &trials, std::uint64_t point) {
        std::vector<double> mse;
        long exact = 0, failures = 0;
        for (const auto &t : trials) {
            if (!t) {
                ++failures;
                continue;
            }
            if (!t->converged) ++failures;
            mse.push_back(t->mse);
            exact += t->exact;
        }
        out.failures += failures;
        const auto s = metrics::summarize(mse);
        std::vector<std::string> row{mode, std::to_string(n), std::to_string(k), std::to_string(sensors),
                                     std::to_string(m), format_number(snr),
                                     mse.empty() ? "" : format_number(s.mean),
                                     mse.empty() ? "" : format_number(s.stderr_),
                                     mse.empty() ? "" : format_number(double(exact) / double(mse.size())),
                                     std::to_string(failures)};
        add_tail(row, ctx, point, static_cast<long>(trials.size()));
        tab.rows.push_back(row);
    };

    const auto identity = std::make_shared<linops::IdentityMap>(sec.n);
    for (std::size_t j = 0; j < snrs.size(); ++j) {
        const std::uint64_t point = Rng::derive(ctx.seed, j);
        for (double f : factors) {
            const Index m = static_cast<Index>(std::ceil(f * double(m_min)));
            const auto trials = parallel_map<std::optional<CsTrial>>(
                static_cast<std::size_t>(ctx.trials), ctx.workers,
                [&](std::size_t t) -> std::optional<CsTrial> {
                    try {
                        const std::uint64_t ts = Rng::derive(point, t);
                        Rng sig = Rng::stream(ts, 1), sens = Rng::stream(ts, 2), noise = Rng::stream(ts, 3);
                        const CVec x = sparse_signal(sig, sec.n, sec.k);
                        const auto Phi = gaussian_sensing(m, sec.n, sens);
                        CVec y = csd_encode(x, *Phi);
                        const double sigma = measurement_noise_sigma(x.squaredNorm(), m, snrs[j]);
                        if (sigma > 0.0) y += noise.cnormal_vector(m, sigma * sigma);
                        const auto dec = csd_decode(y, *Phi, *identity, default_lambda(*Phi, y, sigma));
                        const double e = relative_error(dec.estimate, x);
                        return CsTrial{e * e, e <= kExactTolerance, dec.report.converged};
                    } catch (const std::exception &) {
                        return std::nullopt;
                    }
                });
            fold("single", sec.n, sec.k, 1, m, snrs[j], trials, point);
        }
    }

    const auto &J = sec.joint;
    const auto jid = std::make_shared<linops::IdentityMap>(J.n);
    const std::uint64_t jpoint = Rng::derive(ctx.seed, 0x6a6f696e74);
    for (auto mode : J.modes) {
        const auto trials = parallel_map<std::optional<CsTrial>>(
            static_cast<std::size_t>(J.trials), ctx.workers, [&](std::size_t t) -> std::optional<CsTrial> {
                try {
                    const std::uint64_t ts = Rng::derive(jpoint, t);
                    Rng sig = Rng::stream(ts, 1), noise = Rng::stream(ts, 3);
                    const CMat X = correlated_ensemble(sig, J.n, J.sensors, J.rank, J.pool);
                    const double sigma =
                        measurement_noise_sigma(X.squaredNorm() / double(J.sensors), J.m, J.snr_db);
                    std::vector<CVec> y;
                    std::vector<MapPtr> Phi;
                    for (Index s = 0; s < J.sensors; ++s) {
                        Rng sens = Rng::stream(ts, 16 + static_cast<std::uint64_t>(s));
                        auto P = gaussian_sensing(J.m, J.n, sens);
                        CVec ys = csd_encode(X.col(s), *P);
                        if (sigma > 0.0) ys += noise.cnormal_vector(J.m, sigma * sigma);
                        y.push_back(std::move(ys));
                        Phi.push_back(std::move(P));
                    }
                    JointParams p;
                    p.sigma = sigma;
                    const auto r = joint_decode(y, Phi, jid, mode, p);
                    const double e = relative_error(r.estimate, X);
                    return CsTrial{e * e, e <= kExactTolerance, r.converged};
                } catch (const std::exception &) {
                    return std::nullopt;
                }
            });
        fold(to_string(mode), J.n, J.pool, J.sensors, J.m, J.snr_db, trials, jpoint);
    }
    out.extras["m_min"] = m_min;
    out.tables = {tab};
    return out;
}

Outcome dispatch(const Context &ctx) {
    const std::string e = ctx.config["experiment"].get<std::string>();
    if (e == "oneshot_ra") return run_oneshot(ctx);
    if (e == "cran_feedback") return run_cran(ctx);
    if (e == "seckey") return run_seckey(ctx);
    return run_cs(ctx);
}

Json base_manifest(const Context &ctx) {
    Json m;
    m["experiment"] = ctx.config["experiment"];
    m["config"] = ctx.config;
    m["config_hash"] = ctx.hash;
    m["seed"] = ctx.seed;
    m["trials"] = ctx.trials;
    m["workers"] = ctx.workers;
    m["commit"] = SPARSE5G_COMMIT;
    return m;
}

Context make_context(const Json &config, const RunOptions &options) {
    Json c = config;
    if (options.seed_override) c["seed"] = *options.seed_override;
    Context ctx;
    ctx.config = normalize(c);
    ctx.hash = config_hash(ctx.config);
    ctx.seed = ctx.config["seed"].get<std::uint64_t>();
    ctx.trials = ctx.config["trials"].get<long>();
    ctx.workers = std::max(1, options.workers);
    return ctx;
}

void write_manifest(const std::filesystem::path &dir, const Json &m) {
    std::ofstream f(dir / "manifest.json");
    f << m.dump(2) << "\n";
    if (!f) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
}

Json *field_at(Json &config, const std::string &path) {
    Json *cur = &config;
    std::stringstream ss(path);
    std::string part;
    while (std::getline(ss, part, '.')) {
        if (!cur->is_object() || !cur->contains(part)) return nullptr;
        cur = &(*cur)[part];
    }
    return cur;
}

void collect_numeric(const Json &node, const std::string &prefix, std::vector<std::string> &out) {
    for (const auto &[k, v] : node.items()) {
        const std::string path = prefix.empty() ? k : prefix + "." + k;
        if (v.is_object()) collect_numeric(v, path, out);
        else if (v.is_number() && path != "seed") out.push_back(path);
    }
}

} // namespace

// ---------------------------------------------------------------------------
// Public API
// ---------------------------------------------------------------------------

ConfigError::ConfigError(std::vector<std::string> diagnostics)
    : std::runtime_error("invalid config:\n  " + join(diagnostics, "\n  ")),
      diagnostics_(std::move(diagnostics)) {}

Json default_config() {
    return Json{{"experiment", "oneshot_ra"},
                {"description", ""},
                {"seed", 1},
                {"trials", 200},
                {"oneshot", oneshot_defaults()},
                {"cran", cran_defaults()},
                {"seckey", seckey_defaults()},
                {"cs_codec", cs_codec_defaults()}};
}

Json normalize(const Json &user) {
    Json c = default_config();
    Diags diags;
    merge_checked(c, user, "", diags);
    if (!diags.empty()) throw ConfigError(diags);

    const std::string e = c["experiment"].get<std::string>();
    if (std::none_of(kExperiments.begin(), kExperiments.end(), [&](auto &p) { return p.first == e; }))
        diags.push_back("experiment: expected one of oneshot_ra|cran_feedback|seckey|cs_codec, got \"" + e +
                        "\"");
    if (c["seed"].is_number_integer() && c["seed"].get<std::int64_t>() < 0 && !c["seed"].is_number_unsigned())
        diags.push_back("seed: must be >= 0");
    if (c["trials"].get<std::int64_t>() < 1) diags.push_back("trials: must be >= 1");
    parse_oneshot(c["oneshot"], diags);
    parse_cran(c["cran"], diags);
    parse_seckey(c["seckey"], diags);
    parse_cs(c["cs_codec"], diags);
    if (!diags.empty()) throw ConfigError(diags);
    return c;
}

std::string config_hash(const Json &config) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : config.dump()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

int resolve_workers(std::optional<int> requested) {
    if (const char *env = std::getenv("SPARSE5G_WORKERS"); env && *env) {
        char *end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 1)
            throw std::invalid_argument(std::string("SPARSE5G_WORKERS: expected positive integer, got \"") +
                                        env + "\"");
        return static_cast<int>(v);
    }
    if (requested) {
        if (*requested < 1) throw std::invalid_argument("workers must be >= 1");
        return *requested;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void Table::write(const std::filesystem::path &path) const {
    std::ofstream f(path, std::ios::binary);
    f << join(header, ",") << "\n";
    for (const auto &r : rows) f << join(r, ",") << "\n";
    if (!f) throw std::runtime_error("cannot write " + path.string());
}

RunResult run_scenario(const Json &config, const RunOptions &options) {
    const Context ctx = make_context(config, options);
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o = dispatch(ctx);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::filesystem::create_directories(options.out_dir);
    RunResult res;
    res.manifest = base_manifest(ctx);
    Json files = Json::array();
    for (const auto &t : o.tables) {
        t.write(options.out_dir / (t.name + ".csv"));
        files.push_back(t.name + ".csv");
    }
    res.manifest["files"] = files;
    res.manifest["wall_time_s"] = wall;
    res.manifest["failures"] = o.failures;
    for (const auto &[k, v] : o.extras.items()) res.manifest[k] = v;
    write_manifest(options.out_dir, res.manifest);
    res.tables = std::move(o.tables);
    return res;
}

std::vector<std::string> sweepable_fields(const Json &config) {
    std::vector<std::string> out;
    collect_numeric(normalize(config), "", out);
    return out;
}

RunResult sweep(const Json &config, const std::string &parameter, std::vector<double> values,
                const RunOptions &options) {
    const Context base = make_context(config, options);
    std::vector<std::string> valid;
    collect_numeric(base.config, "", valid);
    if (std::find(valid.begin(), valid.end(), parameter) == valid.end())
        throw ConfigError({parameter + ": not a numeric config field (valid: " + join(valid, ", ") + ")"});
    if (values.empty()) throw ConfigError({parameter + ": empty value list"});
    Diags diags;
    check_grid(values, parameter, diags);
    if (!diags.empty()) throw ConfigError(diags);

    const bool integral = field_at(const_cast<Json &>(base.config), parameter)->is_number_integer();
    const auto rank = sorted_rank(values);
    std::vector<Context> runs;
    for (std::size_t i = 0; i < values.size(); ++i) {
        Json c = base.config;
        Json *f = field_at(c, parameter);
        if (integral) {
            if (values[i] != std::floor(values[i]))
                throw ConfigError({parameter + ": expected integer value, got " + format_number(values[i])});
            *f = static_cast<std::int64_t>(values[i]);
        } else {
            *f = values[i];
        }
        if (Json *g = field_at(c, parameter + "_grid"); g && g->is_array()) *g = Json::array({*f});
        c["seed"] = Rng::derive(base.seed, rank[i]);
        RunOptions o = options;
        o.seed_override.reset();
        runs.push_back(make_context(c, o));
    }

    const auto t0 = std::chrono::steady_clock::now();
    Table out{"sweep", {}, {}};
    long failures = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        Outcome o = dispatch(runs[i]);
        failures += o.failures;
        const Table &primary = o.tables.front();
        if (out.header.empty()) {
            out.header = {"parameter", "value"};
            out.header.insert(out.header.end(), primary.header.begin(), primary.header.end());
        }
        for (const auto &r : primary.rows) {
            std::vector<std::string> row{parameter, format_number(values[i])};
            row.insert(row.end(), r.begin(), r.end());
            out.rows.push_back(std::move(row));
        }
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::filesystem::create_directories(options.out_dir);
    out.write(options.out_dir / "sweep.csv");
    RunResult res;
    res.manifest = base_manifest(base);
    res.manifest["parameter"] = parameter;
    res.manifest["values"] = values;
    Json seeds = Json::array();
    for (const auto &r : runs) seeds.push_back(r.seed);
    res.manifest["value_seeds"] = seeds;
    res.manifest["files"] = Json::array({"sweep.csv"});
    res.manifest["wall_time_s"] = wall;
    res.manifest["failures"] = failures;
    write_manifest(options.out_dir, res.manifest);
    res.tables = {out};
    return res;
}

std::vector<std::string> list_scenarios(const std::filesystem::path &dir) {
    std::vector<std::string> out;
    if (!std::filesystem::is_directory(dir)) return out;
    for (const auto &e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path().stem().string());
    std::sort(out.begin(), out.end());
    return out;
}

Json load_config(const std::string &path_or_name, const std::filesystem::path &scenario_dir) {
    std::filesystem::path p(path_or_name);
    if (!std::filesystem::exists(p) && p.extension().empty() && !scenario_dir.empty())
        p = scenario_dir / (path_or_name + ".json");
    std::ifstream f(p);
    if (!f) throw ConfigError({path_or_name + ": cannot open config file"});
    try {
        return Json::parse(f, nullptr, true, true);
    } catch (const Json::parse_error &e) {
        throw ConfigError({p.string() + ": " + e.what()});
    }
}

} // namespace sparse5g::scenario
