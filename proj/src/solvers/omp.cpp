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

#include <cmath>
#include <stdexcept>
#include <string>

namespace sparse5g::solvers {

RecoveryReport omp(const LinearMap &A, const CVec &y, Index k, const OmpOptions &options) {
    if (y.size() != A.rows())
        throw std::invalid_argument("omp: measurement length " + std::to_string(y.size()) +
                                    " != operator rows " + std::to_string(A.rows()));
    if (k < 0 || k > A.rows())
        throw std::invalid_argument("omp: sparsity " + std::to_string(k) +
                                    " must lie in [0, rows]");
    if (options.residual_tolerance < 0.0)
        throw std::invalid_argument("omp: residual_tolerance must be >= 0");

    const Index n = A.cols();
    RVec norms = RVec::Ones(n);
    if (options.column_norms) {
        if (options.column_norms->size() != n)
            throw std::invalid_argument("omp: column_norms has wrong length");
        norms = *options.column_norms;
    } else if (options.normalize_columns) {
        for (Index j = 0; j < n; ++j) norms(j) = A.column(j).norm();
    }

    RecoveryReport report;
    report.shape = {n, 1};
    report.estimate = CVec::Zero(n);
    report.converged = true;

    std::vector<Index> support;
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    CMat atoms(A.rows(), 0);
    CVec coef;
    CVec r = y;
    double rnorm = r.norm();

    while (static_cast<Index>(support.size()) < k && rnorm > options.residual_tolerance) {
        const CVec c = A.apply_adjoint(r);
        Index best = -1;
        double best_score = 0.0;
        for (Index j = 0; j < n; ++j) {
            if (used[static_cast<std::size_t>(j)] || !(norms(j) > 0.0)) continue;
            const double score = std::abs(c(j)) / norms(j);
            if (score > best_score) {
                best_score = score;
                best = j;
            }
        }
        if (best < 0) break;

        CMat trial(A.rows(), atoms.cols() + 1);
        trial << atoms, A.column(best);
        Eigen::ColPivHouseholderQR<CMat> qr;
        qr.setThreshold(1e-10);
        qr.compute(trial);
        if (qr.rank() < trial.cols()) {
            report.converged = false;
            break;
        }
        atoms = std::move(trial);
        support.push_back(best);
        used[static_cast<std::size_t>(best)] = true;
        coef = qr.solve(y);
        r = y - atoms * coef;
        rnorm = r.norm();
        ++report.iterations_used;
        report.objective_trace.push_back(rnorm);
    }

    for (std::size_t i = 0; i < support.size(); ++i)
        report.estimate(support[i]) = coef(static_cast<Index>(i));
    report.final_residual = rnorm;
    report.l1_norm = report.estimate.cwiseAbs().sum();
    return report;
}

} // namespace sparse5g::solvers
