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

// Test-only helpers: dense materialization of operators and seeded draws.

#include "sparse5g/linops.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace sparse5g::testing {

inline CMat materialize(const linops::LinearMap &A) {
    CMat M(A.rows(), A.cols());
    for (Index j = 0; j < A.cols(); ++j) {
        CVec e = CVec::Zero(A.cols());
        e(j) = 1.0;
        M.col(j) = A.apply(e);
    }
    return M;
}

inline CVec randn(Index n, std::mt19937_64 &gen, double var = 1.0) {
    std::normal_distribution<double> nd(0.0, std::sqrt(var / 2.0));
    CVec v(n);
    for (Index i = 0; i < n; ++i) v(i) = cplx(nd(gen), nd(gen));
    return v;
}

inline CMat randn(Index r, Index c, std::mt19937_64 &gen, double var = 1.0) {
    std::normal_distribution<double> nd(0.0, std::sqrt(var / 2.0));
    CMat M(r, c);
    for (Index j = 0; j < c; ++j)
        for (Index i = 0; i < r; ++i) M(i, j) = cplx(nd(gen), nd(gen));
    return M;
}

/// k-sparse vector with unit-modulus random-phase entries on a uniform support.
inline CVec sparse_vector(Index n, Index k, std::mt19937_64 &gen) {
    std::vector<Index> idx(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    std::shuffle(idx.begin(), idx.end(), gen);
    std::uniform_real_distribution<double> ph(0.0, 2.0 * kPi);
    CVec x = CVec::Zero(n);
    for (Index i = 0; i < k; ++i) x(idx[static_cast<std::size_t>(i)]) = std::polar(1.0, ph(gen));
    return x;
}

} // namespace sparse5g::testing
