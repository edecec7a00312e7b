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

#include "sparse5g/airmodel.hpp"
#include "sparse5g/types.hpp"

#include <optional>
#include <vector>

namespace sparse5g::metrics {

using airmodel::Bits;

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Wilson score interval for a binomial proportion; z = 1.96 gives 95%.
Interval wilson_interval(long successes, long trials, double z = 1.959963984540054);

/// Symbol errors accumulated over active users.
struct SymbolTally {
    long errors = 0;
    long symbols = 0;

    void merge(const SymbolTally &other) {
        errors += other.errors;
        symbols += other.symbols;
    }
    /// Absent when no symbols were counted.
    std::optional<double> rate() const;
};

/// Compares estimated and true bits for every user in `active`; both
/// vectors are indexed by user id. Throws on length mismatch.
SymbolTally count_symbol_errors(const std::vector<Bits> &estimated, const std::vector<Bits> &truth,
                                const std::vector<Index> &active);

/// errors / symbols over the active users; absent when `active` is empty.
std::optional<double> ser(const std::vector<Bits> &estimated, const std::vector<Bits> &truth,
                          const std::vector<Index> &active);

struct DetectionTally {
    long trials = 0;
    long false_detections = 0;
    long missed_detections = 0;
    long inactive_exposures = 0;
    long active_exposures = 0;

    void merge(const DetectionTally &other);
    /// Adds one trial given the detected and true active sets over n_t users.
    void record(const std::vector<Index> &detected, const std::vector<Index> &active, Index n_t);
    void validate() const;
};

struct RateWithInterval {
    double value = 0.0;
    Interval ci;
};

struct DetectionRates {
    RateWithInterval p_fd;
    RateWithInterval p_md;
};

/// Throws std::invalid_argument when either exposure count is zero.
DetectionRates detection_rates(const DetectionTally &tally);

/// 4 sqrt(1 + delta) / (1 - (1 + sqrt 2) delta).
double c2_constant(double delta_2k1);
inline constexpr double kRipPole = 0.41421356237309504880; // 1 / (1 + sqrt 2)

/// log(1 + (m c2^2 / n) (snr (1 - alpha) beta / alpha + 1 / alpha)).
double rate_error_bound(double m, double n, double snr_linear, double alpha, double beta,
                        double delta_2k1);
/// m >= k1 log(n)^5 with unit constant.
bool rate_bound_condition_met(double m, double n, double k1);

// Significance helpers.

/// P(Z > z) for a standard normal.
double normal_sf(double z);

/// One-sided p-value for H1: p_a < p_b (pooled two-proportion z test).
double proportion_less_pvalue(long k_a, long n_a, long k_b, long n_b);

/// One-sided p-value for H1: mean(d) > 0, normal approximation to the
/// paired t statistic. Zero-variance samples give 0 or 1.
double paired_greater_pvalue(const std::vector<double> &diffs);

/// One-sided exact sign test for H1: P(d > 0) > 1/2; ties are dropped.
double sign_test_greater_pvalue(const std::vector<double> &diffs);

struct MeanSummary {
    double mean = 0.0;
    double stderr_ = 0.0;
    long count = 0;
};
MeanSummary summarize(const std::vector<double> &values);

} // namespace sparse5g::metrics
