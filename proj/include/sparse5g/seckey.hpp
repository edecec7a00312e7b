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
#include "sparse5g/cran_feedback.hpp"

#include <vector>

namespace sparse5g::seckey {

using airmodel::Bits;
using airmodel::PerturbMode;
using airmodel::Rng;

struct SeckeyConfig {
    Index n = 256;
    Index n_d = 32;
    Index antennas = 4;
    Index k1 = 3;
    Index m_fb = 64;
    double snr1_db = 20.0;
    double snr2_db = 20.0;
    /// Split as ceil(b/2) phase bits and floor(b/2) magnitude bits.
    int bits_per_tap = 2;
    cran_feedback::Recovery recovery = cran_feedback::Recovery::omp;
    std::uint64_t plan_seed = 1;

    void validate() const;
    /// Single node, single terminal view of the feedback network.
    cran_feedback::CranConfig network() const;
};

struct KeyMaterial {
    Bits bits;
    /// Selected taps, antenna-major, ascending delay within an antenna.
    std::vector<cplx> source_taps;
    /// Set for an all-zero channel; bits is then empty.
    bool empty = false;
};

/// Quantizes the k1 strongest taps of every antenna. Phase: uniform bins
/// on [0, 2 pi). Magnitude: share of the selected-tap energy mapped through
/// 1 - (1 - u)^(k1 - 1), which makes the bins equiprobable for Gaussian
/// taps. Bin indices are Gray-coded, most significant bit first.
KeyMaterial key_from_channel(const CMat &H, Index k1, int bits_per_tap);

/// Fraction of differing bits. An empty key against a nonempty one counts
/// as a coin flip (0.5). Throws on two nonempty keys of different length.
double key_disagreement(const Bits &a, const Bits &b);

/// Sum of per-position plug-in binary entropies over equally long keys.
double key_entropy(const std::vector<Bits> &keys);

/// Rank-one magnitude whose distortion energy matches phase perturbation
/// of the given magnitude: 2 (1 - sinc(magnitude)).
double equal_energy_rank_one(double phase_magnitude);

struct KeygenResult {
    double mse_bob = 0.0;
    double mse_eve = 0.0;
    double kdr_bob = 0.0;
    double kdr_eve = 0.0;
    bool eve_key_empty = false;
    bool converged = true;
    /// Key derived from the true channel.
    Bits reference_key;
};

/// Truth CIR, relay-and-compress feedback, recovery from the clean (Bob)
/// and perturbed (Eve) feedback, channel MSE and key disagreement against
/// the truth-derived key.
KeygenResult keygen_experiment(const SeckeyConfig &config, const cran_feedback::CranPlan &plan,
                               PerturbMode mode, double magnitude, std::uint64_t seed);

} // namespace sparse5g::seckey
