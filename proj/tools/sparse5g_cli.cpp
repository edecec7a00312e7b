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

#include "CLI11.hpp"

#include <cstdlib>
#include <iostream>

#ifndef SPARSE5G_SCENARIO_DIR
#define SPARSE5G_SCENARIO_DIR "scenarios"
#endif

namespace sc = sparse5g::scenario;

namespace {

std::filesystem::path scenario_dir(const std::string &flag) {
    if (!flag.empty()) return flag;
    if (const char *env = std::getenv("SPARSE5G_SCENARIO_DIR"); env && *env) return env;
    return SPARSE5G_SCENARIO_DIR;
}

void print_summary(const sc::Json &m, const std::filesystem::path &out) {
    std::cout << "experiment " << m["experiment"].get<std::string>() << "  seed " << m["seed"]
              << "  trials " << m["trials"] << "  workers " << m["workers"] << "\n";
    if (m.contains("overhead"))
        std::cout << "control overhead " << sc::format_number(100.0 * m["overhead"].get<double>()) << "%\n";
    std::cout << "failures " << m["failures"] << "  wall " << sc::format_number(m["wall_time_s"].get<double>())
              << " s\n";
    for (const auto &f : m["files"]) std::cout << "wrote " << (out / f.get<std::string>()).string() << "\n";
    std::cout << "wrote " << (out / "manifest.json").string() << "\n";
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"sparse5g experiment runner"};
    app.require_subcommand(1);
    std::string dir_flag;
    app.add_option("--scenario-dir", dir_flag, "Directory holding bundled scenarios");

    std::string config, out_dir = "out";
    std::optional<int> workers;
    std::optional<std::uint64_t> seed;

    auto *run = app.add_subcommand("run", "Run a scenario and write CSV tables plus manifest.json");
    run->add_option("config", config, "Config file or bundled scenario name")->required();
    run->add_option("-o,--out", out_dir, "Output directory");
    run->add_option("-w,--workers", workers, "Worker threads (SPARSE5G_WORKERS overrides)");
    run->add_option("-s,--seed", seed, "Override the config seed");

    std::string parameter;
    std::vector<double> values;
    auto *sw = app.add_subcommand("sweep", "Run once per value of a numeric field; writes sweep.csv");
    sw->add_option("config", config, "Config file or bundled scenario name")->required();
    sw->add_option("-p,--param", parameter, "Dotted field name, e.g. oneshot.alpha")->required();
    sw->add_option("-v,--values", values, "Comma separated values")->delimiter(',');
    sw->add_option("-o,--out", out_dir, "Output directory");
    sw->add_option("-w,--workers", workers, "Worker threads (SPARSE5G_WORKERS overrides)");
    sw->add_option("-s,--seed", seed, "Override the base seed");

    auto *ls = app.add_subcommand("list-scenarios", "List bundled scenarios");
    auto *pd = app.add_subcommand("print-default-config", "Print the full default config");

    CLI11_PARSE(app, argc, argv);

    try {
        const auto dir = scenario_dir(dir_flag);
        if (ls->parsed()) {
            for (const auto &name : sc::list_scenarios(dir)) {
                std::string desc;
                try {
                    desc = sc::load_config(name, dir).value("description", "");
                } catch (const std::exception &) {
                }
                std::cout << name << (desc.empty() ? "" : "  " + desc) << "\n";
            }
            return 0;
        }
        if (pd->parsed()) {
            std::cout << sc::default_config().dump(2) << "\n";
            return 0;
        }
        sc::RunOptions opts;
        opts.out_dir = out_dir;
        opts.workers = sc::resolve_workers(workers);
        opts.seed_override = seed;
        const sc::Json cfg = sc::load_config(config, dir);
        const sc::RunResult r = run->parsed() ? sc::run_scenario(cfg, opts)
                                              : sc::sweep(cfg, parameter, values, opts);
        print_summary(r.manifest, opts.out_dir);
        return 0;
    } catch (const sc::ConfigError &e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
