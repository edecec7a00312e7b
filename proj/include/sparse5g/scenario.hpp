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

#pragma once

#include "json.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace sparse5g::scenario {

using Json = nlohmann::json;

/// Invalid configuration; one diagnostic per offending field, each
/// prefixed with its dotted path.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> diagnostics);
    const std::vector<std::string> &diagnostics() const { return diagnostics_; }

private:
    std::vector<std::string> diagnostics_;
};

/// Every field of every experiment section with its default value.
Json default_config();

/// User config merged onto the defaults and fully validated, including the
/// module preconditions. Throws ConfigError.
Json normalize(const Json &user);

/// FNV-1a of the canonical dump, 16 hex digits.
std::string config_hash(const Json &config);

/// Worker count: SPARSE5G_WORKERS when set, else `requested`, else the
/// hardware concurrency. Always >= 1.
int resolve_workers(std::optional<int> requested);

struct Table {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void write(const std::filesystem::path &path) const;
};

std::string format_number(double v);

struct RunOptions {
    std::filesystem::path out_dir;
    int workers = 1;
    std::optional<std::uint64_t> seed_override;
};

struct RunResult {
    std::vector<Table> tables;
    Json manifest;
};

/// Runs the experiment named by config["experiment"] and writes its CSV
/// tables and manifest.json into out_dir (created if missing).
RunResult run_scenario(const Json &config, const RunOptions &options);

/// One run per value of the numeric field `parameter` (dotted path, e.g.
/// "oneshot.alpha"), each seeded from the value's index in sorted order.
/// Writes sweep.csv (primary table rows prefixed by parameter and value)
/// and manifest.json.
RunResult sweep(const Json &config, const std::string &parameter, std::vector<double> values,
                const RunOptions &options);

/// Numeric scalar fields that sweep accepts.
std::vector<std::string> sweepable_fields(const Json &config);

/// Bundled scenario names (file stems of *.json in dir), sorted.
std::vector<std::string> list_scenarios(const std::filesystem::path &dir);

/// Reads a JSON file; a bare name is looked up as <dir>/<name>.json.
Json load_config(const std::string &path_or_name, const std::filesystem::path &scenario_dir);

/// Runs fn(0..count-1) on `workers` threads; results are stored by index so
/// the outcome does not depend on scheduling.
template <class R>
std::vector<R> parallel_map(std::size_t count, int workers, const std::function<R(std::size_t)> &fn) {
    std::vector<R> out(count);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count || failed.load()) return;
            try {
                out[i] = fn(i);
            } catch (...) {
                if (!failed.exchange(true)) error = std::current_exception();
                return;
            }
        }
    };
    const int n = std::max(1, std::min<int>(workers, static_cast<int>(std::max<std::size_t>(count, 1))));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n; ++t) pool.emplace_back(worker);
        for (auto &t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
    return out;
}

} // namespace sparse5g::scenario
