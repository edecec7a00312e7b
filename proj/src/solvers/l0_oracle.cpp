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

#include "sparse5g/solvers.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <stdexcept>

namespace sparse5g::solvers {

L0Solution l0_oracle(const CMat &A, const CVec &y, Index k) {
    const Index n = A.cols();
    if (y.size() != A.rows()) throw std::invalid_argument("l0_oracle: dimension mismatch");
    if (n > 24 || k > 4)
        throw std::invalid_argument("l0_oracle: guard exceeded (requires n <= 24 and k <= 4)");
    if (k < 0) throw std::invalid_argument("l0_oracle: k must be >= 0");

    L0Solution best;
    best.x = CVec::Zero(n);
    best.residual = y.norm();
    const Index s = std::min(k, n);
    if (s == 0) return best;

    // Supersets never fit worse, so only supports of size s are enumerated.
    std::vector<Index> idx(static_cast<std::size_t>(s));
    for (Index i = 0; i < s; ++i) idx[static_cast<std::size_t>(i)] = i;
    const double scale = std::max(y.norm(), 1e-300);
    bool first = true;
    while (true) {
        CMat sub(A.rows(), s);
        for (Index i = 0; i < s; ++i) sub.col(i) = A.col(idx[static_cast<std::size_t>(i)]);
        const CVec c = sub.colPivHouseholderQr().solve(y);
        const double res = (y - sub * c).norm();
        CVec x = CVec::Zero(n);
        for (Index i = 0; i < s; ++i) x(idx[static_cast<std::size_t>(i)]) = c(i);

        const double tie = 1e-9 * scale;
        if (first || res < best.residual - tie) {
            best.x = x;
            best.residual = res;
            best.unique = true;
            first = false;
        } else if (res <= best.residual + tie) {
            if ((x - best.x).norm() > 1e-6 * std::max(best.x.norm(), 1e-300)) best.unique = false;
        }

        Index pos = s - 1;
        while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == n - s + pos) --pos;
        if (pos < 0) break;
        ++idx[static_cast<std::size_t>(pos)];
        for (Index i = pos + 1; i < s; ++i)
            idx[static_cast<std::size_t>(i)] = idx[static_cast<std::size_t>(i - 1)] + 1;
    }
    return best;
}

} // namespace sparse5g::solvers
