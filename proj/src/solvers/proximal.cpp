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

#include "detail.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>

namespace sparse5g::solvers {

namespace {

constexpr double kTiny = 1e-300;

CMat as_matrix(const CVec &v, MatrixShape shape) {
    return Eigen::Map<const CMat>(v.data(), shape.rows, shape.cols);
}

CVec as_vector(const CMat &M) { return Eigen::Map<const CVec>(M.data(), M.size()); }

double spectral_norm(const CMat &M) {
    if (M.size() == 0) return 0.0;
    Eigen::JacobiSVD<CMat> svd(M);
    return svd.singularValues()(0);
}

void check_shape(const LinearMap &A, MatrixShape shape, const char *who) {
    if (shape.rows <= 0 || shape.cols <= 0 || shape.size() != A.cols())
        throw std::invalid_argument(std::string(who) + ": shape " + std::to_string(shape.rows) +
                                    "x" + std::to_string(shape.cols) +
                                    " does not match operator columns " +
                                    std::to_string(A.cols()));
}

void check_rhs(const LinearMap &A, const CVec &y, const char *who) {
    if (y.size() != A.rows())
        throw std::invalid_argument(std::string(who) + ": measurement length " +
                                    std::to_string(y.size()) + " != operator rows " +
                                    std::to_string(A.rows()));
}

} // namespace

void SolverOptions::validate() const {
    if (!(tolerance > 0.0)) throw std::invalid_argument("SolverOptions: tolerance must be > 0");
    if (max_iterations < 1)
        throw std::invalid_argument("SolverOptions: max_iterations must be >= 1");
    if (power_iterations < 1)
        throw std::invalid_argument("SolverOptions: power_iterations must be >= 1");
    if (lambda < 0.0) throw std::invalid_argument("SolverOptions: lambda must be >= 0");
}

CMat RecoveryReport::matrix() const {
    if (shape.size() != estimate.size())
        throw std::logic_error("RecoveryReport::matrix: estimate is not shaped");
    return as_matrix(estimate, shape);
}

CVec soft_threshold(const CVec &v, double threshold) {
    CVec out(v.size());
    for (Index i = 0; i < v.size(); ++i) {
        const double a = std::abs(v(i));
        out(i) = a > threshold ? v(i) * ((a - threshold) / a) : cplx(0.0, 0.0);
    }
    return out;
}

CMat singular_value_threshold(const CMat &M, double threshold) {
    if (M.size() == 0) return M;
    Eigen::JacobiSVD<CMat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    RVec s = (svd.singularValues().array() - threshold).max(0.0);
    Index r = 0;
    while (r < s.size() && s(r) > 0.0) ++r;
    if (r == 0) return CMat::Zero(M.rows(), M.cols());
    return svd.matrixU().leftCols(r) * s.head(r).cast<cplx>().asDiagonal() *
           svd.matrixV().leftCols(r).adjoint();
}

double nuclear_norm(const CMat &M) {
    if (M.size() == 0) return 0.0;
    Eigen::JacobiSVD<CMat> svd(M);
    return svd.singularValues().sum();
}

double operator_norm_sq(const LinearMap &A, int iterations) {
    if (A.cols() == 0 || A.rows() == 0) return 0.0;
    std::mt19937_64 gen(0x5eedULL);
    std::normal_distribution<double> nd;
    CVec v(A.cols());
    for (Index i = 0; i < v.size(); ++i) v(i) = cplx(nd(gen), nd(gen));
    v /= v.norm();
    double estimate = 0.0;
    for (int it = 0; it < std::max(iterations, 1); ++it) {
        CVec w = A.apply_adjoint(A.apply(v));
        const double nw = w.norm();
        if (nw <= kTiny) return estimate;
        estimate = std::real(v.dot(w));
        v = w / nw;
    }
    return std::max(estimate, A.apply(v).squaredNorm());
}

namespace detail {

double L1Penalty::value(const CVec &x) const { return x.cwiseAbs().sum(); }
CVec L1Penalty::prox(const CVec &v, double t) const { return soft_threshold(v, t); }
double L1Penalty::dual_bound(const CVec &g) const {
    return g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
}

double NuclearPenalty::value(const CVec &x) const { return nuclear_norm(as_matrix(x, shape_)); }
CVec NuclearPenalty::prox(const CVec &v, double t) const {
    return as_vector(singular_value_threshold(as_matrix(v, shape_), t));
}
double NuclearPenalty::dual_bound(const CVec &g) const {
    return spectral_norm(as_matrix(g, shape_));
}

double SparseLowRankPenalty::value(const CVec &x) const {
    return nuclear_.value(x) + weight_ * l1_.value(x);
}

CVec SparseLowRankPenalty::prox(const CVec &v, double t) const {
    // Dykstra splitting, i.e. block coordinate ascent on the dual pair
    // (p, q); any dual start converges, so the previous call's duals
    // (rescaled to the new step) seed the next one.
    if (p_.size() != v.size() || !(t_ > 0.0)) {
        p_ = CVec::Zero(v.size());
        q_ = CVec::Zero(v.size());
    } else if (t != t_) {
        p_ *= t / t_;
        q_ *= t / t_;
    }
    t_ = t;
    CVec x = v - p_ - q_;
    for (int it = 0; it < 200; ++it) {
        CVec yk = nuclear_.prox(x + p_, t);
        p_ = x + p_ - yk;
        CVec xn = l1_.prox(yk + q_, t * weight_);
        q_ = yk + q_ - xn;
        const double change = (xn - x).norm();
        x = std::move(xn);
        if (change <= 1e-10 * std::max(x.norm(), v.norm() * 1e-6 + kTiny)) break;
    }
    return x;
}

double SparseLowRankPenalty::dual_bound(const CVec &g) const {
    // Zero is optimal once mu exceeds either single-penalty bound.
    const double nb = nuclear_.dual_bound(g);
    const double lb = weight_ > 0.0 ? l1_.dual_bound(g) / weight_
                                    : std::numeric_limits<double>::infinity();
    return std::min(nb, lb);
}

namespace {

double objective(const Penalty &g, double mu, const CVec &x, const CVec &Ax, const CVec &y) {
    return mu * g.value(x) + 0.5 * (Ax - y).squaredNorm();
}

} // namespace

std::optional<CVec> l1_kkt_polish(const LinearMap &A, const CVec &y, double mu, const CVec &x) {
    const double peak = x.size() ? x.cwiseAbs().maxCoeff() : 0.0;
    if (!(peak > 0.0) || !(mu > 0.0)) return std::nullopt;
    const CVec Ahy = A.apply_adjoint(y);
    const double slack = 1e-8 * mu + 1e-13 * Ahy.cwiseAbs().maxCoeff();

    for (double tau : {1e-2, 1e-4, 1e-6}) {
        std::vector<Index> S;
        std::vector<cplx> phase;
        for (Index i = 0; i < x.size(); ++i)
            if (std::abs(x(i)) > tau * peak) {
                S.push_back(i);
                phase.push_back(x(i) / std::abs(x(i)));
            }
        std::vector<CVec> cols;
        for (Index j : S) cols.push_back(A.column(j));

        // Active-set growth: solve the support equations, then add the worst
        // violator of |a_j^H r| <= mu until the conditions hold.
        for (int grow = 0; grow <= A.rows(); ++grow) {
            const Index k = static_cast<Index>(S.size());
            if (k == 0 || k > A.rows()) break;
            CMat AS(A.rows(), k);
            CVec b(k), ph(k);
            for (Index i = 0; i < k; ++i) {
                AS.col(i) = cols[static_cast<std::size_t>(i)];
                b(i) = Ahy(S[static_cast<std::size_t>(i)]);
                ph(i) = phase[static_cast<std::size_t>(i)];
            }
            Eigen::LDLT<CMat> ldlt(AS.adjoint() * AS);
            if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-12) break;

            // Fixed point x_S = G^{-1}(A_S^H y - mu phase(x_S)).
            CVec xs = ldlt.solve(b - mu * ph);
            bool ok = false;
            for (int it = 0; it < 200; ++it) {
                if ((xs.array().abs() == 0.0).any()) break;
                ph = xs.array() / xs.array().abs().cast<cplx>();
                CVec next = ldlt.solve(b - mu * ph);
                const double change = (next - xs).norm();
                xs = std::move(next);
                if (change <= 1e-13 * xs.norm()) {
                    ok = true;
                    break;
                }
            }
            if (!ok || (xs.array().abs() == 0.0).any()) break;

            CVec full = CVec::Zero(x.size());
            for (Index i = 0; i < k; ++i) full(S[static_cast<std::size_t>(i)]) = xs(i);
            const CVec c = A.apply_adjoint(y - AS * xs);
            bool on_support = true;
            Index worst = -1;
            double worst_val = mu + slack;
            for (Index i = 0; i < x.size(); ++i) {
                if (full(i) != cplx(0.0, 0.0)) {
                    const cplx want = mu * full(i) / std::abs(full(i));
                    if (std::abs(c(i) - want) > slack) on_support = false;
                } else if (std::abs(c(i)) > worst_val) {
                    worst_val = std::abs(c(i));
                    worst = i;
                }
            }
            if (!on_support) break;
            if (worst < 0) return full;
            S.push_back(worst);
            phase.assign(static_cast<std::size_t>(k + 1), cplx(0.0, 0.0));
            for (Index i = 0; i < k; ++i) phase[static_cast<std::size_t>(i)] = ph(i);
            phase.back() = c(worst) / std::abs(c(worst));
            cols.push_back(A.column(worst));
        }
    }
    return std::nullopt;
}

PenalizedSolution solve_penalized(const LinearMap &A, const CVec &y, const Penalty &g, double mu,
                                  const CVec &x0, double lipschitz, const SolverOptions &options,
                                  double tolerance) {
    PenalizedSolution out;
    double L = std::max(lipschitz, kTiny);
    const bool backtrack = options.step_rule == StepRule::backtracking;

    CVec x = x0;
    CVec Ax = A.apply(x);
    double Fx = objective(g, mu, x, Ax, y);
    CVec x_prev = x, Ax_prev = Ax;
    CVec w = x, Aw = Ax;
    double t = 1.0;

    for (int k = 0; k < options.max_iterations; ++k) {
        const CVec rw = Aw - y;
        const CVec grad = A.apply_adjoint(rw);
        const double fw = 0.5 * rw.squaredNorm();
        CVec z, Az;
        for (int bt = 0; bt < 60; ++bt) {
            z = g.prox(w - grad / L, mu / L);
            Az = A.apply(z);
            if (!backtrack) break;
            const CVec d = z - w;
            const double model = fw + std::real(grad.dot(d)) + 0.5 * L * d.squaredNorm();
            const double fz = 0.5 * (Az - y).squaredNorm();
            if (fz <= model + 1e-12 * std::abs(model) + kTiny) break;
            L *= 2.0;
        }
        const double Fz = objective(g, mu, z, Az, y);
        const double step = (z - w).norm();
        const double scale = std::max({z.norm(), w.norm(), kTiny});
        const double obj_change = std::abs(Fx - Fz);

        if (Fz <= Fx) {
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            const double beta = (t - 1.0) / t_next;
            x_prev = std::move(x);
            Ax_prev = std::move(Ax);
            x = std::move(z);
            Ax = std::move(Az);
            Fx = Fz;
            w = x + beta * (x - x_prev);
            Aw = Ax + beta * (Ax - Ax_prev);
            t = t_next;
        } else {
            // Restart from the best iterate.
            w = x;
            Aw = Ax;
            t = 1.0;
        }
        out.trace.push_back(Fx);
        out.iterations = k + 1;

        if (step <= tolerance * scale && obj_change <= tolerance * std::max(std::abs(Fx), kTiny)) {
            out.converged = true;
            break;
        }
    }
    out.x = std::move(x);
    out.Ax = std::move(Ax);
    out.lipschitz = L;
    return out;
}

PenalizedSolution penalized_path(const LinearMap &A, const CVec &y, const Penalty &g,
                                 double mu_target, const SolverOptions &options) {
    const double L0 = 1.02 * operator_norm_sq(A, options.power_iterations);
    const double mu_max = g.dual_bound(A.apply_adjoint(y));
    PenalizedSolution sol;
    sol.x = CVec::Zero(A.cols());
    sol.Ax = CVec::Zero(A.rows());
    sol.lipschitz = L0;
    if (mu_target >= mu_max || L0 <= 0.0) {
        sol.converged = true;
        sol.trace.push_back(0.5 * y.squaredNorm());
        return sol;
    }
    double mu = mu_max;
    int total = 0;
    while (mu > mu_target) {
        mu = std::max(mu_target, mu * 0.25);
        const double tol = mu == mu_target ? options.tolerance : std::max(options.tolerance, 1e-5);
        PenalizedSolution next = solve_penalized(A, y, g, mu, sol.x, L0, options, tol);
        total += next.iterations;
        sol = std::move(next);
    }
    sol.iterations = total;
    if (dynamic_cast<const L1Penalty *>(&g) != nullptr) {
        if (auto p = l1_kkt_polish(A, y, mu_target, sol.x)) {
            CVec Ap = A.apply(*p);
            const double Fp = objective(g, mu_target, *p, Ap, y);
            if (sol.trace.empty() || Fp <= sol.trace.back()) {
                sol.x = std::move(*p);
                sol.Ax = std::move(Ap);
                sol.trace.push_back(Fp);
                sol.converged = true;
            }
        }
    }
    return sol;
}

// Least squares on the thresholded support of x; returned only when the
// residual stays within `target` and the l1 norm does not grow.
std::optional<CVec> l1_support_refit(const LinearMap &A, const CVec &y, const CVec &x,
                                     double target) {
    const double peak = x.size() ? x.cwiseAbs().maxCoeff() : 0.0;
    if (!(peak > 0.0)) return std::nullopt;
    const double l1 = x.cwiseAbs().sum();
    for (double tau : {1e-2, 1e-4, 1e-6}) {
        std::vector<Index> S;
        for (Index i = 0; i < x.size(); ++i)
            if (std::abs(x(i)) > tau * peak) S.push_back(i);
        const Index k = static_cast<Index>(S.size());
        if (k == 0 || k > A.rows()) continue;
        CMat AS(A.rows(), k);
        for (Index i = 0; i < k; ++i) AS.col(i) = A.column(S[static_cast<std::size_t>(i)]);
        Eigen::ColPivHouseholderQR<CMat> qr(AS);
        if (qr.rank() < k) continue;
        const CVec xs = qr.solve(y);
        CVec p = CVec::Zero(x.size());
        for (Index i = 0; i < k; ++i) p(S[static_cast<std::size_t>(i)]) = xs(i);
        if ((A.apply(p) - y).norm() <= target && p.cwiseAbs().sum() <= l1) return p;
    }
    return std::nullopt;
}

RecoveryReport constrained_by_continuation(const LinearMap &A, const CVec &y, double epsilon,
                                           const Penalty &g, MatrixShape shape,
                                           const SolverOptions &options) {
    options.validate();
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
        throw std::invalid_argument("epsilon must be finite and >= 0");
    RecoveryReport report;
    report.shape = shape;
    const double ynorm = y.norm();
    const double target = epsilon * (1.0 + options.tolerance) + 1e-12 * ynorm;
    if (ynorm <= target) {
        report.estimate = CVec::Zero(A.cols());
        report.final_residual = ynorm;
        report.converged = true;
        report.objective_trace.push_back(0.5 * y.squaredNorm());
        return report;
    }

    const double L0 = 1.02 * operator_norm_sq(A, options.power_iterations);
    const double mu_max = g.dual_bound(A.apply_adjoint(y));
    int total = 0;

    auto residual = [&](const PenalizedSolution &s) { return (s.Ax - y).norm(); };

    double mu_hi = mu_max;
    double mu = mu_max;
    PenalizedSolution best;
    best.x = CVec::Zero(A.cols());
    best.Ax = CVec::Zero(A.rows());
    bool feasible = false;
    double mu_lo = 0.0;
    PenalizedSolution lo;

    while (mu > mu_max * 1e-14) {
        mu *= 0.25;
        PenalizedSolution s = solve_penalized(A, y, g, mu, best.x, L0, options, options.tolerance);
        total += s.iterations;
        const double r = residual(s);
        best = std::move(s);
        if (r <= target) {
            feasible = true;
            mu_lo = mu;
            lo = best;
            break;
        }
        mu_hi = mu;
        if (total > 50 * options.max_iterations) break;
    }

    if (!feasible) {
        report.estimate = best.x;
        report.final_residual = residual(best);
        report.objective_trace = best.trace;
        report.iterations_used = total;
        report.penalty_weight = mu;
        report.converged = false;
        fill_norms(report);
        return report;
    }

    if (epsilon > 0.0) {
        double r_lo = residual(lo);
        for (int b = 0; b < 40; ++b) {
            if (r_lo >= epsilon * (1.0 - 1e-2)) break;
            if (mu_hi / mu_lo < 1.0 + 1e-3) break;
            const double mid = std::sqrt(mu_lo * mu_hi);
            PenalizedSolution s = solve_penalized(A, y, g, mid, lo.x, L0, options, options.tolerance);
            total += s.iterations;
            const double r = residual(s);
            if (r <= target) {
                mu_lo = mid;
                lo = std::move(s);
                r_lo = r;
            } else {
                mu_hi = mid;
            }
        }
    }

    if (const auto *l1 = dynamic_cast<const L1Penalty *>(&g)) {
        (void)l1;
        if (auto p = l1_kkt_polish(A, y, mu_lo, lo.x)) {
            CVec Ap = A.apply(*p);
            const double Fp = objective(g, mu_lo, *p, Ap, y);
            if ((Ap - y).norm() <= target && (lo.trace.empty() || Fp <= lo.trace.back())) {
                lo.x = std::move(*p);
                lo.Ax = std::move(Ap);
                lo.trace.push_back(Fp);
                lo.converged = true;
            }
        }
        if (auto p = l1_support_refit(A, y, lo.x, target)) {
            lo.Ax = A.apply(*p);
            lo.x = std::move(*p);
            lo.trace.push_back(objective(g, mu_lo, lo.x, lo.Ax, y));
            lo.converged = true;
        }
    }

    report.estimate = lo.x;
    report.final_residual = residual(lo);
    report.objective_trace = lo.trace;
    report.iterations_used = total;
    report.penalty_weight = mu_lo;
    report.converged = lo.converged;
    fill_norms(report);
    return report;
}

void fill_norms(RecoveryReport &report) {
    report.l1_norm = report.estimate.cwiseAbs().sum();
    if (report.shape.size() == report.estimate.size() && report.shape.rows > 0)
        report.nuclear_norm = nuclear_norm(as_matrix(report.estimate, report.shape));
    else
        report.nuclear_norm = 0.0;
}

} // namespace detail

RecoveryReport bpdn(const LinearMap &A, const CVec &y, double epsilon,
                    const SolverOptions &options) {
    check_rhs(A, y, "bpdn");
    return detail::constrained_by_continuation(A, y, epsilon, detail::L1Penalty{},
                                               {A.cols(), 1}, options);
}

RecoveryReport nuclear_min(const LinearMap &A, const CVec &y, double epsilon, MatrixShape shape,
                           const SolverOptions &options) {
    check_rhs(A, y, "nuclear_min");
    check_shape(A, shape, "nuclear_min");
    return detail::constrained_by_continuation(A, y, epsilon, detail::NuclearPenalty(shape),
                                               shape, options);
}

RecoveryReport sparse_lowrank_min(const LinearMap &A, const CVec &y, double lambda,
                                  double epsilon, MatrixShape shape,
                                  const SolverOptions &options) {
    check_rhs(A, y, "sparse_lowrank_min");
    check_shape(A, shape, "sparse_lowrank_min");
    if (!(lambda >= 0.0)) throw std::invalid_argument("sparse_lowrank_min: lambda must be >= 0");
    if (lambda == 0.0)
        return detail::constrained_by_continuation(A, y, epsilon, detail::NuclearPenalty(shape),
                                                   shape, options);
    return detail::constrained_by_continuation(
        A, y, epsilon, detail::SparseLowRankPenalty(shape, lambda), shape, options);
}

RecoveryReport lasso(const LinearMap &Phi, const LinearMap &Psi, const CVec &y, double lambda,
                     const SolverOptions &options) {
    options.validate();
    check_rhs(Phi, y, "lasso");
    if (!(lambda > 0.0)) throw std::invalid_argument("lasso: lambda must be > 0");
    if (Psi.rows() != Psi.cols() || Psi.cols() != Phi.cols())
        throw std::invalid_argument("lasso: Psi must be square with Phi.cols() columns");
    {
        std::mt19937_64 gen(0x11a550ULL);
        std::normal_distribution<double> nd;
        CVec v(Psi.cols());
        for (Index i = 0; i < v.size(); ++i) v(i) = cplx(nd(gen), nd(gen));
        const double e1 = (Psi.apply_adjoint(Psi.apply(v)) - v).norm();
        const double e2 = (Psi.apply(Psi.apply_adjoint(v)) - v).norm();
        if (e1 > 1e-8 * v.norm() || e2 > 1e-8 * v.norm())
            throw std::invalid_argument("lasso: Psi must be unitary");
    }
    // Substitute z = Psi x, so the problem is a plain l1 lasso in z.
    detail::FunctionMap A(
        Phi.rows(), Phi.cols(), [&](const CVec &z) { return Phi.apply(Psi.apply_adjoint(z)); },
        [&](const CVec &r) { return Psi.apply(Phi.apply_adjoint(r)); }, "lasso_operator");
    detail::PenalizedSolution sol =
        detail::penalized_path(A, y, detail::L1Penalty{}, lambda, options);

    RecoveryReport report;
    report.estimate = Psi.apply_adjoint(sol.x);
    report.shape = {Phi.cols(), 1};
    report.iterations_used = sol.iterations;
    report.final_residual = (sol.Ax - y).norm();
    report.objective_trace = std::move(sol.trace);
    report.converged = sol.converged;
    report.l1_norm = sol.x.cwiseAbs().sum();
    report.penalty_weight = lambda;
    return report;
}

DemixResult demix(const linops::MapPtr &Phi, const std::vector<linops::MapPtr> &dictionaries,
                  const CVec &y, double epsilon, const SolverOptions &options) {
    if (!Phi) throw std::invalid_argument("demix: null measurement operator");
    if (dictionaries.empty()) throw std::invalid_argument("demix: no dictionaries");
    std::vector<linops::MapPtr> blocks;
    blocks.reserve(dictionaries.size());
    for (const auto &D : dictionaries) {
        if (!D) throw std::invalid_argument("demix: null dictionary");
        if (D->rows() != Phi->cols())
            throw std::invalid_argument("demix: dictionary rows must equal Phi columns");
        blocks.push_back(std::make_shared<linops::ComposedMap>(Phi, D));
    }
    linops::HStackMap stacked(blocks);
    DemixResult out;
    out.report = bpdn(stacked, y, epsilon, options);
    for (std::size_t p = 0; p < blocks.size(); ++p)
        out.components.push_back(
            out.report.estimate.segment(stacked.block_offset(static_cast<Index>(p)),
                                        stacked.block_cols(static_cast<Index>(p))));
    return out;
}

} // namespace sparse5g::solvers
