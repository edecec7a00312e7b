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

#include "support/dense.hpp"

#include "sparse5g/fft.hpp"
#include "sparse5g/linops.hpp"

#include <gtest/gtest.h>

#include <memory>

using namespace sparse5g;
using namespace sparse5g::linops;
using sparse5g::testing::materialize;
using sparse5g::testing::randn;

namespace {

CMat dft_matrix(Index n) {
    CMat F(n, n);
    for (Index r = 0; r < n; ++r)
        for (Index c = 0; c < n; ++c)
            F(r, c) = std::polar(1.0 / std::sqrt(double(n)), -2.0 * kPi * double(r * c) / double(n));
    return F;
}

CMat naive_circulant(const CVec &s) {
    const Index n = s.size();
    CMat C(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) C(i, j) = s((i - j + n) % n);
    return C;
}

} // namespace

TEST(SubsampledDft, DcBinOfConstant) {
    auto A = subsampled_dft(4, {0});
    CVec v = CVec::Ones(4);
    CVec out = A->apply(v);
    ASSERT_EQ(out.size(), 1);
    EXPECT_NEAR(std::abs(out(0) - cplx(2.0, 0.0)), 0.0, 1e-12);
}

TEST(SubsampledDft, FullWindowIsUnitary) {
    std::vector<Index> all{0, 1, 2, 3, 4, 5, 6, 7};
    auto A = subsampled_dft(8, all);
    std::mt19937_64 gen(1);
    CVec v = randn(8, gen);
    EXPECT_LT((A->apply(A->apply_adjoint(v)) - v).norm(), 1e-12);
}

TEST(SubsampledDft, MatchesDenseSubmatrix) {
    std::vector<Index> window{3, 0, 7, 12, 15};
    auto A = subsampled_dft(16, window);
    CMat F = dft_matrix(16);
    CMat S(5, 16);
    for (int i = 0; i < 5; ++i) S.row(i) = F.row(window[std::size_t(i)]);
    std::mt19937_64 gen(2);
    for (int t = 0; t < 10; ++t) {
        CVec v = randn(16, gen);
        EXPECT_LT((A->apply(v) - S * v).cwiseAbs().maxCoeff(), 1e-10);
    }
    EXPECT_LT((materialize(*A) - S).cwiseAbs().maxCoeff(), 1e-10);
    for (Index j = 0; j < 16; ++j) EXPECT_LT((A->column(j) - S.col(j)).norm(), 1e-12);
}

TEST(SubsampledDft, RowsOrthonormal) {
    for (Index n : {8, 31, 64}) {
        auto w = comb_window(n, n / 3, 1);
        CMat M = materialize(*subsampled_dft(n, w));
        CMat G = M * M.adjoint();
        EXPECT_LT((G - CMat::Identity(G.rows(), G.rows())).cwiseAbs().maxCoeff(), 1e-10) << n;
    }
}

TEST(SubsampledDft, RejectsBadWindows) {
    try {
        subsampled_dft(8, {1, 3, 1});
        FAIL();
    } catch (const std::invalid_argument &e) {
        EXPECT_NE(std::string(e.what()).find("1"), std::string::npos);
    }
    try {
        subsampled_dft(8, {2, 9});
        FAIL();
    } catch (const std::invalid_argument &e) {
        EXPECT_NE(std::string(e.what()).find("9"), std::string::npos);
    }
    EXPECT_THROW(subsampled_dft(8, {-1}), std::invalid_argument);
}

TEST(SubsampledDft, RejectsWrongInputLength) {
    auto A = subsampled_dft(8, {0, 1});
    EXPECT_THROW(A->apply(CVec::Zero(7)), std::invalid_argument);
    EXPECT_THROW(A->apply_adjoint(CVec::Zero(3)), std::invalid_argument);
}

TEST(Circulant, IdentityGenerator) {
    CVec s = CVec::Zero(6);
    s(0) = 1.0;
    std::mt19937_64 gen(3);
    CVec v = randn(6, gen);
    EXPECT_LT((circulant_apply(s, v) - v).norm(), 1e-12);
}

TEST(Circulant, ShiftGenerator) {
    CVec s(3);
    s << 0.0, 1.0, 0.0;
    CVec v(3);
    v << cplx(1, 0), cplx(2, 0), cplx(3, 0);
    CVec out = circulant_apply(s, v);
    CVec expect(3);
    expect << cplx(3, 0), cplx(1, 0), cplx(2, 0);
    EXPECT_LT((out - expect).norm(), 1e-12);
}

TEST(Circulant, MatchesNaiveProduct) {
    std::mt19937_64 gen(4);
    for (Index n : {16, 15, 7}) {
        CVec s = randn(n, gen), v = randn(n, gen);
        CMat C = naive_circulant(s);
        EXPECT_LT((circulant_apply(s, v) - C * v).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_LT((circulant_apply(s, v, ApplyMode::adjoint) - C.adjoint() * v).cwiseAbs().maxCoeff(),
                  1e-10);
    }
}

TEST(Circulant, LengthMismatchRejected) {
    EXPECT_THROW(circulant_apply(CVec::Zero(4), CVec::Zero(5)), std::invalid_argument);
}

TEST(Circulant, DiagonalizedByDft) {
    std::mt19937_64 gen(5);
    for (Index n : {4, 12, 32}) {
        CVec s = randn(n, gen);
        CMat F = dft_matrix(n);
        CVec lam = F * s * std::sqrt(double(n));
        CMat C = F.adjoint() * lam.asDiagonal() * F;
        EXPECT_LT((C - materialize(Circulant(s))).cwiseAbs().maxCoeff(), 1e-10) << n;
    }
}

TEST(LiftedConv, DeltaConvDelta) {
    CMat X = CMat::Zero(5, 5);
    X(0, 0) = 1.0;
    CVec out = lifted_conv_apply(X);
    CVec e = CVec::Zero(5);
    e(0) = 1.0;
    EXPECT_LT((out - e).norm(), 1e-14);
}

TEST(LiftedConv, RankOneIsConvolution) {
    std::mt19937_64 gen(6);
    for (int t = 0; t < 200; ++t) {
        const Index n = 2 + Index(t % 63);
        CVec h = randn(n, gen), x = randn(n, gen);
        CMat X = h * x.transpose();
        EXPECT_LT((lifted_conv_apply(X) - circulant_apply(h, x)).cwiseAbs().maxCoeff(),
                  1e-10 * (1.0 + h.norm() * x.norm()));
    }
}

TEST(LiftedConv, IdentityBySummation) {
    const Index n = 4;
    CMat X = CMat::Identity(n, n);
    CVec expect = CVec::Zero(n);
    for (Index j = 0; j < n; ++j)
        for (Index k = 0; k < n; ++k) expect((j + k) % n) += X(j, k);
    EXPECT_LT((lifted_conv_apply(X) - expect).norm(), 1e-14);
    // j+j mod 4 hits only 0 and 2, twice each.
    EXPECT_NEAR(expect(0).real(), 2.0, 0);
    EXPECT_NEAR(expect(1).real(), 0.0, 0);
}

TEST(LiftedConv, NonSquareRejected) {
    EXPECT_THROW(lifted_conv_apply(CMat::Zero(3, 4)), std::invalid_argument);
}

TEST(Adjoint, AllOperators) {
    std::mt19937_64 gen(7);
    std::vector<MapPtr> maps;
    maps.push_back(std::make_shared<DenseMap>(randn(5, 9, gen)));
    maps.push_back(std::make_shared<IdentityMap>(6));
    maps.push_back(subsampled_dft(32, comb_window(32, 7, 2)));
    maps.push_back(subsampled_dft(30, centered_window(30, 11)));
    maps.push_back(std::make_shared<Circulant>(randn(12, gen)));
    maps.push_back(std::make_shared<LiftedConvMap>(9));
    maps.push_back(std::make_shared<SubspaceLift>(8, 3, randn(8, 2, gen)));
    auto comp = std::make_shared<ComposedMap>(subsampled_dft(12, {0, 5, 7}),
                                              std::make_shared<Circulant>(randn(12, gen)));
    maps.push_back(comp);
    maps.push_back(std::make_shared<HStackMap>(std::vector<MapPtr>{
        comp, std::make_shared<DenseMap>(randn(3, 4, gen))}));
    maps.push_back(std::make_shared<ColumnwiseMap>(subsampled_dft(10, {1, 2, 3}), 4));
    maps.push_back(std::make_shared<ColumnwiseMap>(std::vector<MapPtr>{
        std::make_shared<DenseMap>(randn(2, 3, gen)), std::make_shared<DenseMap>(randn(4, 3, gen))}));
    maps.push_back(std::make_shared<ScaledMap>(comp, cplx(0.3, -2.0)));
    for (const auto &A : maps) {
        for (int t = 0; t < 5; ++t) {
            CVec u = randn(A->cols(), gen), v = randn(A->rows(), gen);
            EXPECT_LT(adjoint_mismatch(*A, u, v), 1e-9) << A->name();
        }
        CMat M = materialize(*A);
        for (Index j = 0; j < A->cols(); j += std::max<Index>(1, A->cols() / 7))
            EXPECT_LT((A->column(j) - M.col(j)).norm(), 1e-10) << A->name();
    }
}

TEST(Composition, DimensionsChain) {
    auto inner = std::make_shared<IdentityMap>(5);
    auto outer = subsampled_dft(6, {0});
    EXPECT_THROW(ComposedMap(outer, inner), std::invalid_argument);
    auto ok = ComposedMap(subsampled_dft(5, {0, 1}), inner);
    EXPECT_EQ(ok.rows(), 2);
    EXPECT_EQ(ok.cols(), 5);
}

TEST(Windows, Layouts) {
    auto c = centered_window(10, 4);
    EXPECT_EQ(c, (std::vector<Index>{3, 4, 5, 6}));
    auto comb = comb_window(12, 4, 1);
    EXPECT_EQ(comb, (std::vector<Index>{1, 4, 7, 10}));
}

TEST(Fft, UnitaryRoundTrip) {
    std::mt19937_64 gen(8);
    for (Index n : {1, 7, 64, 839}) {
        CVec v = randn(n, gen);
        EXPECT_LT((fft::unitary_idft(fft::unitary_dft(v)) - v).norm(), 1e-10 * v.norm());
        EXPECT_NEAR(fft::unitary_dft(v).norm(), v.norm(), 1e-10 * v.norm());
    }
}
