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

#include "sparse5g/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sparse5g::metrics {

Interval wilson_interval(long successes, long trials, double z) {
    if (trials <= 0 || successes < 0 || successes > trials)
        throw std::invalid_argument("wilson_interval: need 0 <= successes <= trials, trials > 0");
    const double n = double(trials);
    const double p = double(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    if (successes == 0) return {0.0, std::min(1.0, centre + half)};
    if (successes == trials) return {std::max(0.0, centre - half), 1.0};
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

std::optional<double> SymbolTally::rate() const {
    if (symbols == 0) return std::nullopt;
    return double(errors) / double(symbols);
}

SymbolTally count_symbol_errors(const std::vector<Bits> &estimated, const std::vector<Bits> &truth,
                                const std::vector<Index> &active) {
    SymbolTally t;
    for (Index p : active) {
        const auto up = static_cast<std::size_t>(p);
        if (p < 0 || up >= estimated.size() || up >= truth.size())
            throw std::invalid_argument("ser: active user " + std::to_string(p) + " out of range");
        const Bits &e = estimated[up];
        const Bits &b = truth[up];
        if (e.size() != b.size())
            throw std::invalid_argument("ser: bit length mismatch for user " + std::to_string(p));
        for (std::size_t i = 0; i < b.size(); ++i) t.errors += (e[i] != b[i]);
        t.symbols += static_cast<long>(b.size());
    }
    return t;
}

std::optional<double> ser(const std::vector<Bits> &estimated, const std::vector<Bits> &truth,
                          const std::vector<Index> &active) {
    if (active.empty()) return std::nullopt;
    return count_symbol_errors(estimated, truth, active).rate();
}

void DetectionTally::merge(const DetectionTally &o) {
    trials += o.trials;
    false_detections += o.false_detections;
    missed_detections += o.missed_detections;
    inactive_exposures += o.inactive_exposures;
    active_exposures += o.active_exposures;
}

void DetectionTally::record(const std::vector<Index> &detected, const std::vector<Index> &active,
                            Index n_t) {
    std::vector<bool> is_active(static_cast<std::size_t>(n_t), false);
    std::vector<bool> is_detected(static_cast<std::size_t>(n_t), false);
    for (Index p : active) is_active.at(static_cast<std::size_t>(p)) = true;
    for (Index p : detected) is_detected.at(static_cast<std::size_t>(p)) = true;
    ++trials;
    for (std::size_t p = 0; p < is_active.size(); ++p) {
        if (is_active[p]) {
            ++active_exposures;
            missed_detections += !is_detected[p];
        } else {
            ++inactive_exposures;
            false_detections += is_detected[p];
        }
    }
}

void DetectionTally::validate() const {
    if (false_detections < 0 || missed_detections < 0 || false_detections > inactive_exposures ||
        missed_detections > active_exposures)
        throw std::invalid_argument("DetectionTally: counts exceed exposures");
}

DetectionRates detection_rates(const DetectionTally &t) {
    t.validate();
    if (t.inactive_exposures <= 0 || t.active_exposures <= 0)
        throw std::invalid_argument("detection_rates: zero exposures");
    DetectionRates r;
    r.p_fd.value = double(t.false_detections) / double(t.inactive_exposures);
    r.p_fd.ci = wilson_interval(t.false_detections, t.inactive_exposures);
    r.p_md.value = double(t.missed_detections) / double(t.active_exposures);
    r.p_md.ci = wilson_interval(t.missed_detections, t.active_exposures);
    return r;
}

double c2_constant(double delta) {
    if (!(delta >= 0.0) || !(delta < kRipPole))
        throw std::invalid_argument("rate_error_bound: delta_2k1 must lie in [0, " +
                                    std::to_string(kRipPole) + ") (pole at 1/(1+sqrt 2))");
    return 4.0 * std::sqrt(1.0 + delta) / (1.0 - (1.0 + std::sqrt(2.0)) * delta);
}

double rate_error_bound(double m, double n, double snr_linear, double alpha, double beta,
                        double delta) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("rate_error_bound: alpha must lie in (0, 1]");
    if (!(beta > 0.0)) throw std::invalid_argument("rate_error_bound: beta must be > 0");
    if (!(m > 0.0 && n > 0.0)) throw std::invalid_argument("rate_error_bound: m, n must be > 0");
    if (!(snr_linear >= 0.0)) throw std::invalid_argument("rate_error_bound: snr must be >= 0");
    const double c2 = c2_constant(delta);
    const double inner = snr_linear * (1.0 - alpha) * beta / alpha + 1.0 / alpha;
    return std::log1p(m * c2 * c2 / n * inner);
}

bool rate_bound_condition_met(double m, double n, double k1) {
    return m >= k1 * std::pow(std::log(n), 5.0);
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double proportion_less_pvalue(long k_a, long n_a, long k_b, long n_b) {
    if (n_a <= 0 || n_b <= 0) throw std::invalid_argument("proportion test: empty sample");
    const double pa = double(k_a) / double(n_a);
    const double pb = double(k_b) / double(n_b);
    const double pool = double(k_a + k_b) / double(n_a + n_b);
    const double var = pool * (1.0 - pool) * (1.0 / double(n_a) + 1.0 / double(n_b));
    if (var <= 0.0) return pa < pb ? 0.0 : 1.0;
    return normal_sf((pb - pa) / std::sqrt(var));
}

MeanSummary summarize(const std::vector<double> &v) {
    MeanSummary s;
    s.count = static_cast<long>(v.size());
    if (v.empty()) return s;
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / double(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.stderr_ = std::sqrt(ss / double(v.size() - 1) / double(v.size()));
    }
    return s;
}

double paired_greater_pvalue(const std::vector<double> &diffs) {
    if (diffs.size() < 2) throw std::invalid_argument("paired test: need at least 2 pairs");
    const MeanSummary s = summarize(diffs);
    if (s.stderr_ == 0.0) return s.mean > 0.0 ? 0.0 : 1.0;
    return normal_sf(s.mean / s.stderr_);
}

double sign_test_greater_pvalue(const std::vector<double> &diffs) {
    long pos = 0, n = 0;
    for (double d : diffs) {
        if (d == 0.0) continue;
        ++n;
        pos += d > 0.0;
    }
    if (n == 0) return 1.0;
    // P(X >= pos), X ~ Bin(n, 1/2), summed in log space.
    double p = 0.0;
    for (long k = pos; k <= n; ++k)
        p += std::exp(std::lgamma(double(n) + 1) - std::lgamma(double(k) + 1) -
                      std::lgamma(double(n - k) + 1) - double(n) * std::log(2.0));
    return std::min(1.0, p);
}

} // namespace sparse5g::metrics
