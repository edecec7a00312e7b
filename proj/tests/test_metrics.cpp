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

#include <gtest/gtest.h>

#include <cmath>

using namespace sparse5g;
using namespace sparse5g::metrics;

TEST(Ser, Basics) {
    std::vector<Bits> truth{{0, 1, 0, 1}, {}, {1, 1, 0, 0}};
    std::vector<Bits> same = truth;
    EXPECT_EQ(ser(same, truth, {0, 2}).value(), 0.0);
    std::vector<Bits> flipped = truth;
    for (auto &b : flipped)
        for (auto &x : b) x ^= 1;
    EXPECT_EQ(ser(flipped, truth, {0, 2}).value(), 1.0);
    std::vector<Bits> half = truth;
    half[0][0] ^= 1;
    half[0][1] ^= 1;
    half[2][2] ^= 1;
    half[2][3] ^= 1;
    EXPECT_EQ(ser(half, truth, {0, 2}).value(), 0.5);
    // Inactive user 1 ignored even if garbage.
    EXPECT_FALSE(ser(same, truth, {}).has_value());
    std::vector<Bits> short_est = truth;
    short_est[0].pop_back();
    EXPECT_THROW(ser(short_est, truth, {0}), std::invalid_argument);
}

TEST(Ser, OrderInvariant) {
    std::vector<Bits> truth{{0, 1, 1}, {1, 0, 0}};
    std::vector<Bits> est{{1, 1, 1}, {1, 0, 1}};
    EXPECT_EQ(ser(est, truth, {0, 1}), ser(est, truth, {1, 0}));
}

TEST(Detection, PerfectAndDetectAll) {
    DetectionTally t;
    t.record({1, 3}, {1, 3}, 6);
    DetectionRates r = detection_rates(t);
    EXPECT_EQ(r.p_fd.value, 0.0);
    EXPECT_EQ(r.p_md.value, 0.0);
    DetectionTally all;
    all.record({0, 1, 2, 3, 4, 5}, {1, 3}, 6);
    r = detection_rates(all);
    EXPECT_EQ(r.p_fd.value, 1.0);
    EXPECT_EQ(r.p_md.value, 0.0);
}

TEST(Detection, WilsonOracle) {
    DetectionTally t;
    t.inactive_exposures = 1000;
    t.false_detections = 3;
    t.active_exposures = 10;
    t.trials = 1;
    DetectionRates r = detection_rates(t);
    EXPECT_DOUBLE_EQ(r.p_fd.value, 0.003);
    // Wilson bounds written out for p = 0.003, n = 1000, z = 1.96.
    const double z = 1.959963984540054, n = 1000, p = 0.003;
    const double c = (p + z * z / (2 * n)) / (1 + z * z / n);
    const double h = z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / (1 + z * z / n);
    EXPECT_NEAR(r.p_fd.ci.lo, c - h, 1e-12);
    EXPECT_NEAR(r.p_fd.ci.hi, c + h, 1e-12);
    EXPECT_NEAR(r.p_fd.ci.lo, 0.00102, 1e-5);
    EXPECT_NEAR(r.p_fd.ci.hi, 0.00879, 1e-5);
}

TEST(Detection, ZeroExposureRejected) {
    DetectionTally t;
    EXPECT_THROW(detection_rates(t), std::invalid_argument);
    t.record({}, {0, 1, 2}, 3);
    EXPECT_THROW(detection_rates(t), std::invalid_argument);
}

TEST(Detection, MergeAssociative) {
    DetectionTally a, b, c;
    a.record({0}, {1}, 4);
    b.record({1, 2}, {1}, 4);
    c.record({}, {3}, 4);
    DetectionTally ab = a, bc = b;
    ab.merge(b);
    ab.merge(c);
    bc.merge(c);
    DetectionTally a_bc = a;
    a_bc.merge(bc);
    EXPECT_EQ(ab.false_detections, a_bc.false_detections);
    EXPECT_EQ(ab.missed_detections, a_bc.missed_detections);
    EXPECT_EQ(ab.inactive_exposures, 9);
    EXPECT_EQ(ab.active_exposures, 3);
    EXPECT_EQ(ab.trials, 3);
    EXPECT_NO_THROW(ab.validate());
    DetectionTally broken;
    broken.false_detections = 2;
    EXPECT_THROW(broken.validate(), std::invalid_argument);
}

TEST(RateBound, C2AtZero) {
    EXPECT_EQ(c2_constant(0.0), 4.0);
    EXPECT_NEAR(c2_constant(0.2), 4 * std::sqrt(1.2) / (1 - (1 + std::sqrt(2.0)) * 0.2), 1e-14);
    EXPECT_THROW(c2_constant(kRipPole), std::invalid_argument);
    EXPECT_THROW(c2_constant(-0.1), std::invalid_argument);
}

TEST(RateBound, DataTermVanishesAtAlphaOne) {
    EXPECT_NEAR(rate_error_bound(128, 2048, 100.0, 1.0, 1.0, 0.0), std::log(1 + 16.0 * 128 / 2048),
                1e-12);
}

TEST(RateBound, MonotoneOnGrid) {
    for (int i = 0; i < 99; ++i) {
        const double a0 = 0.01 + 0.99 * i / 99.0, a1 = 0.01 + 0.99 * (i + 1) / 99.0;
        EXPECT_GT(rate_error_bound(128, 2048, 100, a0, 1, 0.2), rate_error_bound(128, 2048, 100, a1, 1, 0.2));
        const double d0 = 0.4 * i / 99.0, d1 = 0.4 * (i + 1) / 99.0;
        EXPECT_LT(rate_error_bound(128, 2048, 100, 0.5, 1, d0), rate_error_bound(128, 2048, 100, 0.5, 1, d1));
    }
    EXPECT_GT(rate_error_bound(128, 2048, 100, 0.25, 1, 0.2), rate_error_bound(128, 2048, 100, 0.75, 1, 0.2));
    EXPECT_LT(rate_error_bound(128, 2048, 10, 0.5, 1, 0.2), rate_error_bound(128, 2048, 100, 0.5, 1, 0.2));
    EXPECT_LT(rate_error_bound(128, 2048, 10, 0.5, 1, 0.2), rate_error_bound(128, 2048, 10, 0.5, 2, 0.2));
    EXPECT_LT(rate_error_bound(64, 2048, 10, 0.5, 1, 0.2), rate_error_bound(128, 2048, 10, 0.5, 1, 0.2));
    EXPECT_THROW(rate_error_bound(128, 2048, 10, 0.0, 1, 0.2), std::invalid_argument);
    EXPECT_THROW(rate_error_bound(128, 2048, 10, 0.5, 0.0, 0.2), std::invalid_argument);
    EXPECT_THROW(rate_error_bound(128, 2048, 10, 0.5, 1, 0.5), std::invalid_argument);
}

TEST(RateBound, ConditionFlag) {
    EXPECT_FALSE(rate_bound_condition_met(128, 2048, 4));
    EXPECT_TRUE(rate_bound_condition_met(1e6, 2048, 1));
}

TEST(Stats, NormalTail) {
    EXPECT_NEAR(normal_sf(0.0), 0.5, 1e-15);
    EXPECT_NEAR(normal_sf(1.959963984540054), 0.025, 1e-12);
}

TEST(Stats, SignTestExact) {
    // 9 of 10 positive: P(X >= 9) = 11 / 1024.
    std::vector<double> d{1, 1, 1, 1, 1, 1, 1, 1, 1, -1, 0};
    EXPECT_NEAR(sign_test_greater_pvalue(d), 11.0 / 1024.0, 1e-15);
}

TEST(Stats, PairedAndProportion) {
    EXPECT_LT(paired_greater_pvalue({1.0, 1.1, 0.9, 1.2, 0.8}), 1e-6);
    EXPECT_GT(paired_greater_pvalue({-1.0, -1.1, -0.9}), 0.99);
    EXPECT_LT(proportion_less_pvalue(10, 1000, 50, 1000), 1e-6);
    EXPECT_GT(proportion_less_pvalue(50, 1000, 10, 1000), 0.99);
    MeanSummary s = summarize({1, 2, 3, 4});
    EXPECT_DOUBLE_EQ(s.mean, 2.5);
    EXPECT_NEAR(s.stderr_, std::sqrt(5.0 / 3.0 / 4.0), 1e-14);
    EXPECT_EQ(s.count, 4);
}
