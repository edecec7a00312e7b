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

#include "sparse5g/cs_codec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sparse5g::cs_codec {

namespace {

/// Psi^H as a map.
class AdjointOf final : public LinearMap {
public:
    explicit AdjointOf(MapPtr inner) : inner_(std::move(inner)) {}
    Index rows() const override { return inner_->cols(); }
    Index cols() const override { return inner_->rows(); }
    std::string name() const override { return "AdjointOf(" + inner_->name() + ")"; }

protected:
    CVec forward(const CVec &x) const override { return inner_->apply_adjoint(x); }
    CVec adjoint(const CVec &y) const override { return inner_->apply(y); }

private:
    MapPtr inner_;
};

const MapPtr &sensor_map(const std::vector<MapPtr> &Phi, std::size_t j) {
    return Phi.size() == 1 ? Phi.front() : Phi[j];
}

} // namespace

Index min_measurements(Index n, Index k, double c) {
    if (k < 1 || k > n) throw std::invalid_argument("min_measurements: need 1 <= k <= n");
    return static_cast<Index>(std::ceil(c * double(k) * std::log(double(n) / double(k))));
}

std::shared_ptr<const linops::DenseMap> gaussian_sensing(Index m, Index n, Rng &rng) {
    if (m < 1 || n < 1) throw std::invalid_argument("gaussian_sensing: empty shape");
    CMat A(m, n);
    const double var = 1.0 / double(m);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < m; ++i) A(i, j) = rng.cnormal(var);
    return std::make_shared<linops::DenseMap>(std::move(A));
}

CVec csd_encode(const CVec &x, const LinearMap &Phi) {
    if (Phi.rows() > Phi.cols()) throw std::invalid_argument("csd_encode: need m <= n");
    return Phi.apply(x);
}

double measurement_noise_sigma(double signal_energy, Index m, double snr_db) {
    if (m < 1) throw std::invalid_argument("measurement_noise_sigma: m must be >= 1");
    return std::sqrt(airmodel::noise_variance(snr_db, signal_energy / double(m)));
}

double default_lambda(const LinearMap &Phi, const CVec &y, double sigma) {
    if (sigma > 0.0) {
        double cmax = 0.0;
        for (Index j = 0; j < Phi.cols(); ++j) cmax = std::max(cmax, Phi.column(j).norm());
        return sigma * std::sqrt(2.0 * std::log(double(Phi.cols()))) * cmax;
    }
    const double c = Phi.apply_adjoint(y).cwiseAbs().maxCoeff();
    return c > 0.0 ? 1e-6 * c : 1e-12;
}

DecodeResult csd_decode(const CVec &y, const LinearMap &Phi, const LinearMap &Psi, double lambda,
                        const solvers::SolverOptions &options) {
    DecodeResult d;
    d.report = solvers::lasso(Phi, Psi, y, lambda, options);
    d.estimate = d.report.estimate;
    return d;
}

JointResult joint_decode(const std::vector<CVec> &y, const std::vector<MapPtr> &Phi,
                         const MapPtr &Psi, JointMode mode, const JointParams &params) {
    const auto J = y.size();
    if (J == 0) throw std::invalid_argument("joint_decode: no sensors");
    if (Phi.size() != 1 && Phi.size() != J)
        throw std::invalid_argument("joint_decode: need one shared map or one per sensor");
    if (!Psi) throw std::invalid_argument("joint_decode: null basis");
    const Index n = Psi->cols();
    for (std::size_t j = 0; j < J; ++j) {
        const MapPtr &A = sensor_map(Phi, j);
        if (!A || A->cols() != n || A->rows() != y[j].size())
            throw std::invalid_argument("joint_decode: sensor " + std::to_string(j) + " shape mismatch");
    }
    if (!(params.sigma >= 0.0)) throw std::invalid_argument("joint_decode: sigma must be >= 0");

    JointResult out;
    out.estimate = CMat::Zero(n, static_cast<Index>(J));
    auto lambda_for = [&](const LinearMap &A, const CVec &yj) {
        return params.lambda > 0.0 ? params.lambda : default_lambda(A, yj, params.sigma);
    };

    switch (mode) {
    case JointMode::independent:
        for (std::size_t j = 0; j < J; ++j) {
            const LinearMap &A = *sensor_map(Phi, j);
            DecodeResult d = csd_decode(y[j], A, *Psi, lambda_for(A, y[j]), params.options);
            out.converged = out.converged && d.report.converged;
            out.estimate.col(static_cast<Index>(j)) = d.estimate;
        }
        break;
    case JointMode::sequential_diff: {
        // Lambda is fixed by the first column so an unchanged signal leaves
        // a residual inside the LASSO kill radius.
        const double lambda = lambda_for(*sensor_map(Phi, 0), y[0]);
        CVec prev = CVec::Zero(n);
        for (std::size_t j = 0; j < J; ++j) {
            const LinearMap &A = *sensor_map(Phi, j);
            const CVec r = y[j] - A.apply(prev);
            DecodeResult d = csd_decode(r, A, *Psi, lambda, params.options);
            out.converged = out.converged && d.report.converged;
            prev += d.estimate;
            out.estimate.col(static_cast<Index>(j)) = prev;
        }
        break;
    }
    case JointMode::lowrank:
    case JointMode::lowrank_sparse: {
        const MapPtr psi_h = std::make_shared<AdjointOf>(Psi);
        std::vector<MapPtr> blocks;
        Index total = 0;
        for (std::size_t j = 0; j < J; ++j) {
            blocks.push_back(std::make_shared<linops::ComposedMap>(sensor_map(Phi, j), psi_h));
            total += y[j].size();
        }
        linops::ColumnwiseMap A(blocks);
        CVec stacked(total);
        Index off = 0;
        for (const CVec &yj : y) {
            stacked.segment(off, yj.size()) = yj;
            off += yj.size();
        }
        const double eps = std::max(params.sigma * std::sqrt(double(total)), 1e-6 * stacked.norm());
        const MatrixShape shape{n, static_cast<Index>(J)};
        solvers::RecoveryReport r;
        if (mode == JointMode::lowrank) {
            r = solvers::nuclear_min(A, stacked, eps, shape, params.options);
        } else {
            const double w = params.sparse_weight > 0.0
                                 ? params.sparse_weight
                                 : 1.0 / std::sqrt(double(std::max<Index>(n, static_cast<Index>(J))));
            r = solvers::sparse_lowrank_min(A, stacked, w, eps, shape, params.options);
        }
        out.converged = r.converged;
        const CMat Z = r.matrix();
        for (Index j = 0; j < Z.cols(); ++j) out.estimate.col(j) = Psi->apply_adjoint(Z.col(j));
        break;
    }
    }

    for (std::size_t j = 0; j < J; ++j) {
        const LinearMap &A = *sensor_map(Phi, j);
        const double res = (y[j] - A.apply(out.estimate.col(static_cast<Index>(j)))).norm();
        out.column_residuals.push_back(res);
        // The first column's residual is the decoder's own floor.
        const double floor = out.column_residuals.front();
        const double level = 3.0 * std::max(params.sigma * std::sqrt(double(A.rows())), floor);
        if (mode == JointMode::sequential_diff && j > 0 && res > level) out.propagation_flag = true;
    }
    return out;
}

CMat correlated_ensemble(Rng &rng, Index n, Index sensors, Index rank, Index pool) {
    if (rank < 1 || sensors < 1 || pool < 1 || pool > n)
        throw std::invalid_argument("correlated_ensemble: bad dimensions");
    const std::vector<Index> support = rng.subset(n, pool);
    CMat A = CMat::Zero(n, rank);
    for (Index c = 0; c < rank; ++c)
        for (Index i : support) A(i, c) = rng.cnormal(1.0);
    CMat B(sensors, rank);
    for (Index c = 0; c < rank; ++c)
        for (Index s = 0; s < sensors; ++s) B(s, c) = rng.cnormal(1.0 / double(rank));
    return A * B.transpose();
}

CVec sparse_signal(Rng &rng, Index n, Index k) {
    if (k < 0 || k > n) throw std::invalid_argument("sparse_signal: need 0 <= k <= n");
    CVec x = CVec::Zero(n);
    for (Index i : rng.subset(n, k)) x(i) = rng.cnormal(1.0);
    return x;
}

CVec project_alphabet(const CVec &x, const std::vector<cplx> &alphabet) {
    if (alphabet.empty()) throw std::invalid_argument("project_alphabet: empty alphabet");
    CVec out(x.size());
    for (Index i = 0; i < x.size(); ++i) {
        const auto best = std::min_element(alphabet.begin(), alphabet.end(), [&](cplx a, cplx b) {
            return std::abs(x(i) - a) < std::abs(x(i) - b);
        });
        out(i) = *best;
    }
    return out;
}

double relative_error(const CMat &estimate, const CMat &truth) {
    if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols())
        throw std::invalid_argument("relative_error: shape mismatch");
    const double e = truth.norm();
    const double d = (estimate - truth).norm();
    if (e == 0.0) return d == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return d / e;
}

std::string to_string(JointMode m) {
    switch (m) {
    case JointMode::independent: return "independent";
    case JointMode::lowrank: return "lowrank";
    case JointMode::lowrank_sparse: return "lowrank_sparse";
    case JointMode::sequential_diff: return "sequential_diff";
    }
    return "?";
}

} // namespace sparse5g::cs_codec
