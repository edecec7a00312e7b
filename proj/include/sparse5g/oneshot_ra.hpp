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
#include "sparse5g/metrics.hpp"
#include "sparse5g/solvers.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace sparse5g::oneshot_ra {

using airmodel::Bits;
using airmodel::FrameConfig;
using airmodel::Rng;

/// underlay: pilots spread over all n bins, superposed with data.
/// separated: pilots confined to the measurement window.
enum class PilotSetting { underlay, separated };
enum class WindowLayout { contiguous, comb, random };
enum class Detector { cs, correlation };
enum class ChannelSolver { omp, bpdn };

struct OneshotConfig {
    FrameConfig frame;
    PilotSetting setting = PilotSetting::underlay;
    WindowLayout layout = WindowLayout::comb;
    airmodel::SupportMode support = airmodel::SupportMode::common;
    Detector detector = Detector::cs;
    ChannelSolver solver = ChannelSolver::omp;
    /// Users with score >= threshold are declared active.
    double threshold = 0.02;
    /// Seeds the pilot pool and any random window; fixed across trials.
    std::uint64_t plan_seed = 1;
    /// Decision-directed passes: re-fit each estimated CIR on its support
    /// over the whole frame using the demodulated symbols, then demodulate
    /// again.
    int refine_passes = 0;

    void validate() const;
};

struct FramePlan {
    Index n = 0;
    PilotSetting setting = PilotSetting::underlay;
    /// Unitary-DFT spectra of the unit-energy pilots, length n each.
    std::vector<CVec> pilot_spectra;
    /// Frequency bins carrying each user's payload, in symbol order.
    std::vector<std::vector<Index>> slots;
    Index slot_count = 0;
    std::shared_ptr<const linops::SubsampledDft> measurement;

    Index users() const { return static_cast<Index>(pilot_spectra.size()); }
    CVec pilot(Index p) const;
    /// m / n.
    double overhead() const;
};

FramePlan make_plan(const OneshotConfig &config);

/// Sum over users of diag(a_p) G x_p, with G(i, t) = exp(-2 pi i w_i t / n)
/// and a_p = sqrt(alpha) times user p's pilot spectrum on the window.
/// Input is user-major: x = [x_{u_0}; x_{u_1}; ...], each of length n_d.
class PilotDictionary final : public linops::LinearMap {
public:
    PilotDictionary(const FramePlan &plan, Index n_d, double alpha, std::vector<Index> users);
    /// Generic form: `spectra` are length-n unitary pilot spectra, `window`
    /// the observed bins, each user's weights scaled by `scale`.
    PilotDictionary(Index n, const std::vector<Index> &window, const std::vector<CVec> &spectra,
                    Index n_d, double scale, std::vector<Index> users);
    Index rows() const override { return weights_.rows(); }
    Index cols() const override { return n_d_ * static_cast<Index>(users_.size()); }
    CVec column(Index j) const override;
    std::string name() const override { return "PilotDictionary"; }
    /// Column norms are |a_p| for every delay of user p.
    RVec column_norms() const;
    const std::vector<Index> &users() const { return users_; }
    Index delays() const { return n_d_; }

protected:
    CVec forward(const CVec &x) const override;
    CVec adjoint(const CVec &y) const override;

private:
    Index n_d_;
    std::vector<Index> users_;
    CMat G_;       // m x n_d
    CMat weights_; // m x users
};

/// Ground truth of one frame.
struct FrameTruth {
    std::vector<Index> active;
    /// n_d x n_r per user; zero for inactive users.
    std::vector<CMat> channels;
    std::vector<Bits> bits;
};

FrameTruth draw_truth(const OneshotConfig &config, const FramePlan &plan, Rng &rng);

/// Time-domain received frame (n x n_r), noise included.
CMat build_frame(const FrameConfig &config, const FramePlan &plan, const FrameTruth &truth,
                 Rng &rng);
/// Noise variance per sample used by build_frame.
double frame_noise_variance(const FrameConfig &config);

/// m x n_r window observation.
CMat prach_measure(const CMat &Y, const FramePlan &plan);

struct Detection {
    std::vector<Index> detected;
    /// One score per user.
    std::vector<double> scores;
    bool converged = true;
};

Detection detect_users(const CMat &y_meas, const FramePlan &plan, const OneshotConfig &config,
                       double threshold);

/// Users with score >= threshold.
std::vector<Index> apply_threshold(const std::vector<double> &scores, double threshold);

struct ChannelEstimate {
    /// n_d x n_r per user; empty matrices for users not in the detected set.
    std::vector<CMat> channels;
    bool converged = true;
};

ChannelEstimate estimate_channels(const CMat &y_meas, const std::vector<Index> &detected,
                                  const FramePlan &plan, const OneshotConfig &config);

/// Per-user bits for the users with a nonempty channel estimate; other
/// entries stay empty.
std::vector<Bits> demodulate(const CMat &Y, const std::vector<CMat> &channels,
                             const FramePlan &plan, const FrameConfig &config);

/// Joint least-squares refit of every nonempty estimate on its own tap
/// support, using all n bins with pilots plus the data given by `bits`.
std::vector<CMat> refine_channels(const CMat &Y, const std::vector<CMat> &channels,
                                  const std::vector<Bits> &bits, const FramePlan &plan,
                                  const FrameConfig &config);

struct TrialResult {
    std::uint64_t seed = 0;
    std::vector<Index> active;
    std::vector<Index> detected;
    std::vector<double> scores;
    double channel_error = 0.0;
    double channel_energy = 0.0;
    metrics::SymbolTally symbols;
    /// Demodulation with true channels and true activity.
    metrics::SymbolTally genie_symbols;
    bool converged = true;
    std::string diagnostics;

    std::optional<double> channel_mse() const;
};

TrialResult run_trial(const OneshotConfig &config, const FramePlan &plan, std::uint64_t seed);

struct FlatFadingResult {
    /// Length-n_r signature per user; absent for unmatched users.
    std::vector<std::optional<CVec>> signatures;
    /// |<u, s_p>| energy of each pilot inside the signal subspace, in [0, 1].
    std::vector<double> correlations;
    RVec singular_values;
    Index significant = 0;
    double floor = 0.0;
};

/// Y = sum_p s_p h_p^T + Z with Z of per-entry variance noise_variance.
FlatFadingResult svd_flatfading_detect(const CMat &Y, const std::vector<CVec> &pilots,
                                       double noise_variance);

std::string to_string(PilotSetting s);
std::string to_string(WindowLayout w);
std::string to_string(Detector d);
std::string to_string(ChannelSolver s);

} // namespace sparse5g::oneshot_ra
