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

// Internal interfaces shared by the proximal solvers.

#include "sparse5g/solvers.hpp"

#include <functional>
#include <optional>
#include <string>

namespace sparse5g::solvers::detail {

/// Convex penalty g with an exact (or accurately iterated) proximal map.
class Penalty {
public:
    virtual ~Penalty() = default;
    virtual double value(const CVec &x) const = 0;
    /// argmin_x t g(x) + 1/2 ||x - v||^2
    virtual CVec prox(const CVec &v, double t) const = 0;
    /// mu >= dual_bound(A^H y) guarantees that zero minimizes
    /// mu g(x) + 1/2 ||A x - y||^2.
    virtual double dual_bound(const CVec &g) const = 0;
};

class L1Penalty final : public Penalty {
public:
    double value(const CVec &x) const override;
    CVec prox(const CVec &v, double t) const override;
    double dual_bound(const CVec &g) const override;
};

class NuclearPenalty final : public Penalty {
public:
    explicit NuclearPenalty(MatrixShape shape) : shape_(shape) {}
    double value(const CVec &x) const override;
    CVec prox(const CVec &v, double t) const override;
    double dual_bound(const CVec &g) const override;

private:
    MatrixShape shape_;
};

/// ||X||_* + weight ||vec X||_1, prox by the Dykstra-like splitting.
/// Caches dual iterates between calls, so one instance per solve.
class SparseLowRankPenalty final : public Penalty {
public:
    SparseLowRankPenalty(MatrixShape shape, double weight) : nuclear_(shape), weight_(weight) {}
    double value(const CVec &x) const override;
    CVec prox(const CVec &v, double t) const override;
    double dual_bound(const CVec &g) const override;

private:
    NuclearPenalty nuclear_;
    L1Penalty l1_;
    double weight_;
    mutable CVec p_, q_;
    mutable double t_ = 0.0;
};

/// LinearMap built from two closures; used for on-the-fly compositions
/// over references.
class FunctionMap final : public LinearMap {
public:
    using Fn = std::function<CVec(const CVec &)>;
    FunctionMap(Index rows, Index cols, Fn fwd, Fn adj, std::string name)
        : rows_(rows), cols_(cols), fwd_(std::move(fwd)), adj_(std::move(adj)),
          name_(std::move(name)) {}
    Index rows() const override { return rows_; }
    Index cols() const override { return cols_; }
    std::string name() const override { return name_; }

protected:
    CVec forward(const CVec &x) const override { return fwd_(x); }
    CVec adjoint(const CVec &y) const override { return adj_(y); }

private:
    Index rows_, cols_;
    Fn fwd_, adj_;
    std::string name_;
};

struct PenalizedSolution {
    CVec x;
    CVec Ax;
    int iterations = 0;
    bool converged = false;
    std::vector<double> trace;
    double lipschitz = 0.0;
};

/// Monotone accelerated proximal gradient (MFISTA with function restart)
/// for mu g(x) + 1/2 ||A x - y||^2, warm-started at x0.
PenalizedSolution solve_penalized(const LinearMap &A, const CVec &y, const Penalty &g, double mu,
                                  const CVec &x0, double lipschitz, const SolverOptions &options,
                                  double tolerance);

/// Continuation from the zero-solution weight down to mu_target.
PenalizedSolution penalized_path(const LinearMap &A, const CVec &y, const Penalty &g,
                                 double mu_target, const SolverOptions &options);

/// Constrained program min g(x) s.t. ||A x - y|| <= epsilon, by bracketing
/// and bisecting the penalty weight.
RecoveryReport constrained_by_continuation(const LinearMap &A, const CVec &y, double epsilon,
                                           const Penalty &g, MatrixShape shape,
                                           const SolverOptions &options);

/// Exact l1 lasso minimizer at weight mu on a support read off x, returned
/// only when the full optimality conditions verify.
std::optional<CVec> l1_kkt_polish(const LinearMap &A, const CVec &y, double mu, const CVec &x);

void fill_norms(RecoveryReport &report);

} // namespace sparse5g::solvers::detail
