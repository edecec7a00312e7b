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

#include "sparse5g/airmodel.hpp"
#include "sparse5g/linops.hpp"
#include "sparse5g/solvers.hpp"

#include <memory>
#include <string>
#include <vector>

namespace sparse5g::cs_codec {

using airmodel::Rng;
using linops::LinearMap;
using linops::MapPtr;

/// ceil(c k log(n / k)).
Index min_measurements(Index n, Index k, double c = 4.0);

/// m x n matrix with i.i.d. CN(0, 1/m) entries.
std::shared_ptr<const linops::DenseMap> gaussian_sensing(Index m, Index n, Rng &rng);

/// w = Phi x; nothing else happens at the device.
CVec csd_encode(const CVec &x, const LinearMap &Phi);

/// Noise standard deviation per measurement for a given SNR, taking the
/// expected per-entry power ||x||^2 / m of w.
double measurement_noise_sigma(double signal_energy, Index m, double snr_db);

/// sigma sqrt(2 log n) times the largest column norm; for sigma == 0 a
/// 1e-6 ||Phi^H y||_inf.
double default_lambda(const LinearMap &Phi, const CVec &y, double sigma);

struct DecodeResult {
    CVec estimate;
    solvers::RecoveryReport report;
};

/// LASSO in the sparsifying basis Psi (unitary).
DecodeResult csd_decode(const CVec &y, const LinearMap &Phi, const LinearMap &Psi, double lambda,
                        const solvers::SolverOptions &options = {});

enum class JointMode { independent, lowrank, lowrank_sparse, sequential_diff };

struct JointParams {
    /// Per-measurement noise standard deviation (0 for noiseless).
    double sigma = 0.0;
    /// LASSO weight for the column decodes; <= 0 selects default_lambda.
    double lambda = 0.0;
    /// Weight of the l1 term next to the nuclear norm; <= 0 selects
    /// 1 / sqrt(max(n, sensors)).
    double sparse_weight = 0.0;
    solvers::SolverOptions options;
};

struct JointResult {
    /// n x sensors.
    CMat estimate;
    bool converged = true;
    /// sequential_diff: some later column's residual exceeded 3x the larger
    /// of its noise level and the first column's residual.
    bool propagation_flag = false;
    std::vector<double> column_residuals;
};

/// `Phi` holds one shared map or one map per sensor.
JointResult joint_decode(const std::vector<CVec> &y, const std::vector<MapPtr> &Phi,
                         const MapPtr &Psi, JointMode mode, const JointParams &params = {});

/// X = A B^T with A (n x rank) supported on a common random pool of
/// `pool` rows and B (sensors x rank) dense Gaussian.
CMat correlated_ensemble(Rng &rng, Index n, Index sensors, Index rank, Index pool);

/// k-sparse signal with CN(0, 1) entries on a uniform support.
CVec sparse_signal(Rng &rng, Index n, Index k);

/// Entry-wise nearest point of `alphabet`.
CVec project_alphabet(const CVec &x, const std::vector<cplx> &alphabet);

/// ||estimate - truth|| / ||truth||; exact recovery means <= 1e-3.
double relative_error(const CMat &estimate, const CMat &truth);
inline constexpr double kExactTolerance = 1e-3;

std::string to_string(JointMode m);

} // namespace sparse5g::cs_codec
