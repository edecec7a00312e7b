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

#include "sparse5g/linops.hpp"
#include "sparse5g/types.hpp"

#include <optional>
#include <vector>

namespace sparse5g::solvers {

using linops::LinearMap;

enum class StepRule { fixed, backtracking };

struct SolverOptions {
    int max_iterations = 5000;
    /// Relative change of objective and iterate that ends an inner solve.
    double tolerance = 1e-7;
    StepRule step_rule = StepRule::backtracking;
    /// Penalty weight where the solver takes one (lasso, sparse_lowrank_min).
    double lambda = 0.0;
    int power_iterations = 20;

    /// Throws std::invalid_argument on tolerance <= 0 or max_iterations < 1.
    void validate() const;
};

struct RecoveryReport {
    /// Vectorized estimate; matrix estimates are column-major with `shape`.
    CVec estimate;
    MatrixShape shape;
    int iterations_used = 0;
    /// ||y - A estimate||_2.
    double final_residual = 0.0;
    /// Objective values of the last penalized solve, one per iteration.
    std::vector<double> objective_trace;
    bool converged = false;
    /// sum_i |x_i| and sum of singular values of the estimate.
    double l1_norm = 0.0;
    double nuclear_norm = 0.0;
    /// Penalty weight of the final penalized subproblem.
    double penalty_weight = 0.0;

    CMat matrix() const;
};

/// Orthogonal matching pursuit with a least-squares refit after each atom.
struct OmpOptions {
    /// Stop once ||r||_2 <= residual_tolerance.
    double residual_tolerance = 0.0;
    /// Rank atoms by |<a_j, r>| / ||a_j||. Norms are taken from
    /// column_norms when supplied, else materialized once per call.
    bool normalize_columns = true;
    std::optional<RVec> column_norms;
};

RecoveryReport omp(const LinearMap &A, const CVec &y, Index k, const OmpOptions &options = {});

/// min ||x||_1  s.t.  ||y - A x||_2 <= epsilon.
RecoveryReport bpdn(const LinearMap &A, const CVec &y, double epsilon,
                    const SolverOptions &options = {});

/// min lambda ||Psi x||_1 + 1/2 ||Phi x - y||_2^2 with Psi unitary.
RecoveryReport lasso(const LinearMap &Phi, const LinearMap &Psi, const CVec &y, double lambda,
                     const SolverOptions &options = {});

/// min ||X||_*  s.t.  ||y - A vec(X)||_2 <= epsilon, X of the given shape.
RecoveryReport nuclear_min(const LinearMap &A, const CVec &y, double epsilon, MatrixShape shape,
                           const SolverOptions &options = {});

/// min ||X||_* + lambda ||vec X||_1  s.t.  ||y - A vec(X)||_2 <= epsilon.
RecoveryReport sparse_lowrank_min(const LinearMap &A, const CVec &y, double lambda,
                                  double epsilon, MatrixShape shape,
                                  const SolverOptions &options = {});

struct DemixResult {
    std::vector<CVec> components;
    RecoveryReport report;
};

/// min sum_p ||x_p||_1  s.t.  ||y - Phi sum_p Psi_p x_p||_2 <= epsilon.
DemixResult demix(const linops::MapPtr &Phi, const std::vector<linops::MapPtr> &dictionaries,
                  const CVec &y, double epsilon, const SolverOptions &options = {});

struct L0Solution {
    CVec x;
    double residual = 0.0;
    /// False when another support attains the same residual with a
    /// different coefficient vector.
    bool unique = true;
};

/// Exhaustive best-k-term least squares. Guarded to n <= 24, k <= 4.
L0Solution l0_oracle(const CMat &A, const CVec &y, Index k);

/// Largest eigenvalue of A^H A by power iteration from a fixed seed.
double operator_norm_sq(const LinearMap &A, int iterations = 20);

// Proximal building blocks, exposed for reuse and tests.
CVec soft_threshold(const CVec &v, double threshold);
CMat singular_value_threshold(const CMat &M, double threshold);
double nuclear_norm(const CMat &M);

} // namespace sparse5g::solvers
