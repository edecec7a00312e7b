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

#include "sparse5g/cran_feedback.hpp"

#include <gtest/gtest.h>

#include <Eigen/SVD>

#include <cmath>
#include <numeric>

using namespace sparse5g;
using namespace sparse5g::cran_feedback;
using airmodel::kNoiseless;

namespace {

CMat draw_channels(const CranConfig &c, Rng &rng) {
    CMat H(c.n_d, c.transmit_antennas());
    for (Index b = 0; b < c.nodes; ++b)
        H.middleCols(b * c.antennas_per_node, c.antennas_per_node) =
            airmodel::gen_sparse_cir(rng, c.n_d, c.antennas_per_node, c.k1, airmodel::SupportMode::common);
    return H;
}

CranConfig noiseless(CranConfig c) {
    c.snr1_db = kNoiseless;
    c.snr2_db = kNoiseless;
    return c;
}

} // namespace

TEST(CranConfig, Validation) {
    EXPECT_NO_THROW(CranConfig{}.validate());
    CranConfig c;
    c.users = 13;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = CranConfig{};
    c.k1 = 0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    EXPECT_THROW(make_cran_plan(CranConfig{}, 513), std::invalid_argument);
}

TEST(Load, EqualLoadAxis) {
    CranConfig c;
    for (int b = 0; b <= 8; ++b) EXPECT_EQ(iq_load_bits(c, b), cs_load_bits(c, 48 * b));
    for (int b = 1; b <= 8; ++b) {
        EXPECT_GT(iq_load_bits(c, b), iq_load_bits(c, b - 1));
        EXPECT_GT(cs_load_bits(c, b), cs_load_bits(c, b - 1));
    }
    EXPECT_EQ(iq_load_bits(c, 1), 768.0);
}

TEST(Compress, FullUnitaryIsInvertible) {
    CranConfig c = noiseless(CranConfig{});
    CranPlan plan = make_cran_plan(c, c.n);
    Rng rng(1);
    CMat H = draw_channels(c, rng);
    CMat rx = downlink_pilot_rx(c, plan, H, rng);
    CMat y = terminal_compress(rx, plan.feedback.get(), rng, c.snr2_db, cran_power_ref(c));
    EXPECT_LT((plan.feedback->apply_adjoint(y.col(0)) - rx.col(0)).norm(), 1e-12 * rx.norm());
}

TEST(Compress, EmptyFeedback) {
    CranConfig c = noiseless(CranConfig{});
    CranPlan plan = make_cran_plan(c, 0);
    EXPECT_EQ(plan.m_fb(), 0);
    Rng rng(2);
    CMat H = draw_channels(c, rng);
    CMat y = terminal_compress(downlink_pilot_rx(c, plan, H, rng), plan.feedback.get(), rng, 20.0, 1.0);
    EXPECT_EQ(y.rows(), 0);
    RecoveryResult r = bs_recover(y, plan, c);
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.channels.norm(), 0.0);
}

TEST(Compress, DimensionMismatch) {
    CranConfig c;
    CranPlan plan = make_cran_plan(c, 64);
    Rng rng(3);
    EXPECT_THROW(terminal_compress(CMat::Zero(100, 1), plan.feedback.get(), rng, 20.0, 1.0),
                 std::invalid_argument);
    EXPECT_THROW(downlink_pilot_rx(c, plan, CMat::Zero(5, 12), rng), std::invalid_argument);
    EXPECT_THROW(bs_recover(CMat::Zero(10, 1), plan, c), std::invalid_argument);
}

TEST(Compress, TwoNodeDenseOracle) {
    CranConfig c = noiseless(CranConfig{});
    c.nodes = 2;
    c.users = 4;
    CranPlan plan = make_cran_plan(c, 96);
    Rng rng(4);
    CMat H = draw_channels(c, rng);
    CMat y = terminal_compress(downlink_pilot_rx(c, plan, H, rng), plan.feedback.get(), rng,
                               c.snr2_db, cran_power_ref(c));
    const Index n = c.n;
    // Time-domain pilots by naive inverse DFT, circular convolution, then
    // naive unitary DFT rows on the feedback bins.
    CVec rx = CVec::Zero(n);
    for (Index a = 0; a < c.transmit_antennas(); ++a) {
        const CVec &P = plan.pilot_spectra[static_cast<std::size_t>(a)];
        CVec s(n);
        for (Index t = 0; t < n; ++t) {
            cplx acc = 0;
            for (Index k = 0; k < n; ++k) acc += P(k) * std::polar(1.0, 2.0 * kPi * double((k * t) % n) / double(n));
            s(t) = acc / std::sqrt(double(n));
        }
        for (Index t = 0; t < n; ++t)
            for (Index d = 0; d < c.n_d; ++d) rx(t) += H(d, a) * s(((t - d) % n + n) % n);
    }
    const auto &w = plan.feedback->window();
    for (Index i = 0; i < plan.m_fb(); ++i) {
        cplx acc = 0;
        for (Index t = 0; t < n; ++t)
            acc += rx(t) * std::polar(1.0, -2.0 * kPi * double((w[static_cast<std::size_t>(i)] * t) % n) / double(n));
        EXPECT_LT(std::abs(acc / std::sqrt(double(n)) - y(i, 0)), 1e-9);
    }
}

TEST(Recover, SingleNodeNoiseless) {
    CranConfig c = noiseless(CranConfig{});
    c.nodes = 1;
    c.users = 4;
    CranPlan plan = make_cran_plan(c, 128);
    for (Recovery rec : {Recovery::omp, Recovery::bpdn}) {
        c.recovery = rec;
        for (std::uint64_t s = 0; s < 5; ++s) {
            Rng rng(10 + s);
            CMat H = draw_channels(c, rng);
            CMat y = terminal_compress(downlink_pilot_rx(c, plan, H, rng), plan.feedback.get(), rng,
                                       c.snr2_db, cran_power_ref(c));
            RecoveryResult r = bs_recover(y, plan, c);
            EXPECT_LT((r.channels - H).squaredNorm() / H.squaredNorm(), 1e-3) << to_string(rec);
        }
    }
}

TEST(Recover, TooFewMeasurementsFails) {
    CranConfig c;
    CranPlan plan = make_cran_plan(c, 2);
    double mse = 0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        Rng rng(100 + s);
        CMat H = draw_channels(c, rng);
        CMat y = terminal_compress(downlink_pilot_rx(c, plan, H, rng), plan.feedback.get(), rng,
                                   c.snr2_db, cran_power_ref(c));
        mse += (bs_recover(y, plan, c).channels - H).squaredNorm() / H.squaredNorm();
    }
    // Same order as the zero estimator, whose relative MSE is exactly 1.
    EXPECT_GT(mse / 50, 0.9);
    EXPECT_LT(mse / 50, 2.5);
}

TEST(Recover, PilotReassignmentTransparent) {
    // The base station permutes pilots over antennas between frames; the
    // terminal's processing never sees the pattern.
    CranConfig c;
    CranPlan plan = make_cran_plan(c, 144);
    CranPlan swapped = plan;
    const Index A = c.transmit_antennas();
    std::vector<Index> perm(static_cast<std::size_t>(A));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::reverse(perm.begin(), perm.end());
    for (Index a = 0; a < A; ++a)
        swapped.pilot_spectra[static_cast<std::size_t>(a)] = plan.pilot_spectra[static_cast<std::size_t>(perm[static_cast<std::size_t>(a)])];
    Rng g(7);
    CMat H = draw_channels(c, g);
    CMat Hp(H.rows(), A);
    for (Index a = 0; a < A; ++a) Hp.col(a) = H.col(perm[static_cast<std::size_t>(a)]);

    Rng r1(8), r2(8);
    CMat y1 = terminal_compress(downlink_pilot_rx(c, plan, H, r1), plan.feedback.get(), r1, c.snr2_db, cran_power_ref(c));
    CMat y2 = terminal_compress(downlink_pilot_rx(c, swapped, Hp, r2), swapped.feedback.get(), r2, c.snr2_db, cran_power_ref(c));
    EXPECT_LT((y1 - y2).norm(), 1e-12 * y1.norm());
    CMat e1 = bs_recover(y1, plan, c).channels, e2 = bs_recover(y1, swapped, c).channels;
    for (Index a = 0; a < A; ++a) EXPECT_LT((e2.col(a) - e1.col(perm[static_cast<std::size_t>(a)])).norm(), 1e-10);
}

TEST(Quantize, FineIsAccurate) {
    // Equal-modulus taps never reach the 3 sigma clip.
    Rng r(20);
    CMat H(32, 12);
    for (Index i = 0; i < H.size(); ++i) H(i) = std::polar(1.0, r.uniform(0.0, 2 * kPi));
    CMat Q = iq_quantize(H, 16);
    EXPECT_LT((Q - H).squaredNorm() / double(H.size()), 1e-6);
}

TEST(Quantize, OneBitIsSign) {
    Rng r(21);
    CMat H = r.cnormal_vector(64).reshaped(16, 4);
    const double sigma = std::sqrt(H.squaredNorm() / (2.0 * 64));
    CMat Q = iq_quantize(H, 1);
    for (Index i = 0; i < H.size(); ++i) {
        EXPECT_DOUBLE_EQ(Q(i).real(), std::copysign(1.5 * sigma, H(i).real()));
        EXPECT_DOUBLE_EQ(Q(i).imag(), std::copysign(1.5 * sigma, H(i).imag()));
    }
    EXPECT_GT((Q - H).squaredNorm() / H.squaredNorm(), 0.1);
    EXPECT_THROW(iq_quantize(H, 0), std::invalid_argument);
}

TEST(Quantize, ZeroChannel) {
    CMat Z = CMat::Zero(8, 3);
    EXPECT_EQ(iq_quantize(Z, 4).norm(), 0.0);
    // A zero tap next to nonzero ones lands within half a step.
    CMat H = CMat::Zero(8, 1);
    H(0, 0) = 1.0;
    const double sigma = std::sqrt(1.0 / 16.0);
    const double step = 6 * sigma / 16;
    CMat Q = iq_quantize(H, 4);
    for (Index i = 1; i < 8; ++i) EXPECT_LE(std::abs(Q(i, 0).real()), step / 2 + 1e-15);
}

TEST(Degradation, Formulas) {
    EXPECT_DOUBLE_EQ(degradation(100, 0, 4, Regime::dof), std::log(101.0));
    EXPECT_DOUBLE_EQ(degradation(100, 0, 4, Regime::finite_snr), std::log(101.0));
    for (double b : {1.0, 3.5, 10.0})
        EXPECT_NEAR(degradation(30, 2 * b, 4, Regime::finite_snr), degradation(30, b, 4, Regime::dof), 1e-14);
    EXPECT_NEAR(degradation(100, 10, 4, Regime::dof), std::log(1 + 100 * std::pow(2.0, -10.0 / 3.0)), 1e-14);
    EXPECT_NEAR(degradation(100, 10, 4, Regime::dof), 2.39071, 1e-5);
    EXPECT_THROW(degradation(100, 1, 1, Regime::dof), std::invalid_argument);
    EXPECT_THROW(degradation(100, -1, 4, Regime::dof), std::invalid_argument);
}

TEST(Degradation, MonotoneOnGrid) {
    for (Regime g : {Regime::dof, Regime::finite_snr})
        for (int i = 0; i < 20; ++i) {
            EXPECT_GT(degradation(10, i, 4, g), degradation(10, i + 1, 4, g));
            EXPECT_LT(degradation(i + 1, 5, 4, g), degradation(i + 2, 5, 4, g));
        }
}

TEST(ZeroForcing, GenieMatchesPseudoInverse) {
    CranConfig c;
    Rng rng(30);
    std::vector<CMat> H;
    for (Index u = 0; u < c.users; ++u) H.push_back(draw_channels(c, rng));
    const double snr = 100.0;
    ZfRate z = zf_sumrate(H, H, snr, c.n, 4);
    EXPECT_FALSE(z.regularized);
    // Oracle: SVD pseudo-inverse, unit columns, no interference.
    double total = 0;
    for (Index s = 0; s < 4; ++s) {
        const Index f = s * c.n / 4;
        CMat G(c.users, 12);
        for (Index u = 0; u < c.users; ++u)
            for (Index a = 0; a < 12; ++a) {
                cplx acc = 0;
                for (Index t = 0; t < c.n_d; ++t)
                    acc += H[static_cast<std::size_t>(u)](t, a) * std::polar(1.0, -2.0 * kPi * double(f * t) / double(c.n));
                G(u, a) = acc;
            }
        CMat W = G.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(CMat::Identity(c.users, c.users));
        for (Index u = 0; u < c.users; ++u) {
            const double gain = std::norm((G.row(u) * W.col(u).normalized())(0));
            total += std::log2(1 + snr / double(c.users) * gain);
        }
    }
    EXPECT_NEAR(z.mean_rate, total / 4, 1e-9 * total);
}

TEST(ZeroForcing, ZeroEstimateAndRankDeficiency) {
    CranConfig c;
    Rng rng(31);
    std::vector<CMat> H, Z, dup;
    for (Index u = 0; u < c.users; ++u) {
        H.push_back(draw_channels(c, rng));
        Z.push_back(CMat::Zero(c.n_d, 12));
    }
    EXPECT_EQ(zf_sumrate(Z, H, 100.0, c.n, 8).mean_rate, 0.0);
    dup = H;
    dup[1] = dup[0];
    ZfRate r = zf_sumrate(dup, H, 100.0, c.n, 8);
    EXPECT_TRUE(r.regularized);
    EXPECT_TRUE(std::isfinite(r.mean_rate));
    EXPECT_THROW(zf_sumrate(std::vector<CMat>(13, H[0]), std::vector<CMat>(13, H[0]), 1.0, c.n, 8),
                 std::invalid_argument);
}

TEST(Trial, GenieDominatesPerSeed) {
    CranConfig c;
    CranPlan plan = make_cran_plan(c, 96);
    for (std::uint64_t s = 0; s < 20; ++s) {
        CranTrial t = run_cran_trial(c, plan, 2, s);
        EXPECT_GE(t.rate_genie, t.rate_cs);
        EXPECT_GE(t.rate_genie, t.rate_iq);
        EXPECT_GE(t.rate_cs, t.rate_zero);
        EXPECT_EQ(t.rate_zero, 0.0);
    }
}

TEST(Trial, Deterministic) {
    CranConfig c;
    CranPlan plan = make_cran_plan(c, 96);
    CranTrial a = run_cran_trial(c, plan, 2, 5), b = run_cran_trial(c, plan, 2, 5);
    EXPECT_EQ(a.rate_cs, b.rate_cs);
    EXPECT_EQ(a.rate_iq, b.rate_iq);
    EXPECT_EQ(a.mse_cs, b.mse_cs);
}
