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

#include <memory>
#include <string>
#include <vector>

namespace sparse5g::cran_feedback {

using airmodel::Rng;

enum class Recovery { omp, bpdn };
enum class Regime { dof, finite_snr };

struct CranConfig {
    Index n = 512;
    Index nodes = 3;
    Index antennas_per_node = 4;
    Index users = 10;
    Index n_d = 32;
    Index k1 = 3;
    /// Pilot observation SNR at the terminal (Z1) and feedback link SNR (z2).
    double snr1_db = 20.0;
    double snr2_db = 20.0;
    /// Per-user transmit SNR of the downlink the rate is evaluated on.
    double rate_snr_db = 20.0;
    /// Subcarriers, evenly spaced, averaged in the rate.
    Index rate_subcarriers = 16;
    /// Bits charged per real analog coefficient on the load axis.
    int analog_bits = 8;
    Recovery recovery = Recovery::omp;
    std::uint64_t plan_seed = 1;

    Index transmit_antennas() const { return nodes * antennas_per_node; }
    void validate() const;
};

/// Feedback load in bits per terminal. IQ: every tap of every antenna,
/// 2 * b bits per tap. CS: 2 * analog_bits per complex coefficient.
double iq_load_bits(const CranConfig &config, int bits_per_component);
double cs_load_bits(const CranConfig &config, Index m_fb);

struct CranPlan {
    Index n = 0;
    /// Unit-energy pilot spectra (unitary DFT), one per transmit antenna.
    std::vector<CVec> pilot_spectra;
    /// Feedback compression; null when m_fb == 0.
    std::shared_ptr<const linops::SubsampledDft> feedback;
    Index m_fb() const { return feedback ? feedback->rows() : 0; }
};

/// Random-phase pilots from plan_seed and a random m_fb-bin feedback map.
CranPlan make_cran_plan(const CranConfig &config, Index m_fb);

/// Per-sample noise reference for both noise sources.
double cran_power_ref(const CranConfig &config);

/// sum_a s_a (*) h_a + Z1, time domain (n x 1). `channels` is n_d x antennas.
CMat downlink_pilot_rx(const CranConfig &config, const CranPlan &plan, const CMat &channels,
                       Rng &rng);

/// Phi_fb rx + z2, column by column. No quantization.
CMat terminal_compress(const CMat &rx, const linops::LinearMap *Phi_fb, Rng &rng, double snr2_db,
                       double power_ref);

struct RecoveryResult {
    /// n_d x antennas.
    CMat channels;
    bool converged = true;
};

/// Stacked recovery of every antenna's CIR from one terminal's feedback.
RecoveryResult bs_recover(const CMat &y_fb, const CranPlan &plan, const CranConfig &config);

/// Mid-rise uniform quantizer on real and imaginary parts, clipped at
/// +-3 sigma with sigma the RMS of all components.
CMat iq_quantize(const CMat &H, int bits_per_component);

/// log(1 + p 2^{-b/(n_t-1)}) for dof, with 2(n_t-1) for finite_snr.
double degradation(double p_snr, double b, Index n_t, Regime regime);

struct ZfRate {
    /// Sum over users, averaged over subcarriers, bits/s/Hz.
    double mean_rate = 0.0;
    /// Set when some subcarrier needed the regularized inverse.
    bool regularized = false;
};

/// Channels are per-user n_d x antennas CIRs; downlink row of user i at
/// bin f is the unnormalized DFT of each antenna's CIR.
ZfRate zf_sumrate(const std::vector<CMat> &estimates, const std::vector<CMat> &truth,
                  double snr_linear, Index n, Index subcarriers);

struct CranTrial {
    std::uint64_t seed = 0;
    double rate_genie = 0.0;
    double rate_cs = 0.0;
    double rate_iq = 0.0;
    double rate_zero = 0.0;
    double mse_cs = 0.0;
    double mse_iq = 0.0;
    bool converged = true;
};

/// One network draw evaluated with CS feedback on `plan` and IQ feedback
/// with `iq_bits` per component.
CranTrial run_cran_trial(const CranConfig &config, const CranPlan &plan, int iq_bits,
                         std::uint64_t seed);

std::string to_string(Recovery r);
std::string to_string(Regime r);

} // namespace sparse5g::cran_feedback
