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

#include "sparse5g/cran_feedback.hpp"

#include "sparse5g/fft.hpp"
#include "sparse5g/oneshot_ra.hpp"
#include "sparse5g/solvers.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sparse5g::cran_feedback {

namespace {

constexpr std::uint64_t kPilotStream = 0xc7a1;
constexpr std::uint64_t kFeedbackStream = 0xfeed;
constexpr std::uint64_t kChannelStream = 1;
constexpr std::uint64_t kNoiseStream = 2;

std::vector<Index> all_antennas(Index count) {
    std::vector<Index> a(static_cast<std::size_t>(count));
    std::iota(a.begin(), a.end(), Index{0});
    return a;
}

double relative_error(const std::vector<CMat> &est, const std::vector<CMat> &truth) {
    double err = 0.0, energy = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        err += (est[i] - truth[i]).squaredNorm();
        energy += truth[i].squaredNorm();
    }
    return energy > 0.0 ? err / energy : 0.0;
}

} // namespace

void CranConfig::validate() const {
    if (n < 2) throw std::invalid_argument("cran: n must be >= 2");
    if (nodes < 1 || antennas_per_node < 1) throw std::invalid_argument("cran: empty network");
    if (users < 1) throw std::invalid_argument("cran: users must be >= 1");
    if (users > transmit_antennas())
        throw std::invalid_argument("cran: users exceed total transmit antennas");
    if (n_d < 1 || n_d > n) throw std::invalid_argument("cran: n_d must be in [1, n]");
    if (k1 < 1 || k1 > n_d) throw std::invalid_argument("cran: k1 must be in [1, n_d]");
    if (rate_subcarriers < 1 || rate_subcarriers > n)
        throw std::invalid_argument("cran: rate_subcarriers must be in [1, n]");
    if (analog_bits < 1) throw std::invalid_argument("cran: analog_bits must be >= 1");
}

double iq_load_bits(const CranConfig &config, int bits_per_component) {
    if (bits_per_component < 0) throw std::invalid_argument("iq_load_bits: negative budget");
    return 2.0 * double(bits_per_component) * double(config.transmit_antennas() * config.n_d);
}

double cs_load_bits(const CranConfig &config, Index m_fb) {
    if (m_fb < 0) throw std::invalid_argument("cs_load_bits: negative budget");
    return 2.0 * double(config.analog_bits) * double(m_fb);
}

CranPlan make_cran_plan(const CranConfig &config, Index m_fb) {
    config.validate();
    if (m_fb < 0 || m_fb > config.n) throw std::invalid_argument("make_cran_plan: m_fb must be in [0, n]");
    CranPlan plan;
    plan.n = config.n;
    Rng rng = Rng::stream(config.plan_seed, kPilotStream);
    const double a = 1.0 / std::sqrt(double(config.n));
    for (Index p = 0; p < config.transmit_antennas(); ++p) {
        CVec P(config.n);
        for (Index b = 0; b < config.n; ++b) P(b) = std::polar(a, rng.uniform(0.0, 2.0 * kPi));
        plan.pilot_spectra.push_back(std::move(P));
    }
    if (m_fb > 0) {
        Rng wr = Rng::stream(config.plan_seed, kFeedbackStream);
        plan.feedback = linops::subsampled_dft(config.n, wr.subset(config.n, m_fb));
    }
    return plan;
}

double cran_power_ref(const CranConfig &config) {
    return double(config.transmit_antennas()) / double(config.n);
}

CMat downlink_pilot_rx(const CranConfig &config, const CranPlan &plan, const CMat &channels,
                       Rng &rng) {
    const Index A = config.transmit_antennas();
    if (channels.rows() != config.n_d || channels.cols() != A)
        throw std::invalid_argument("downlink_pilot_rx: channels must be n_d x antennas");
    if (plan.n != config.n || static_cast<Index>(plan.pilot_spectra.size()) != A)
        throw std::invalid_argument("downlink_pilot_rx: plan does not match config");
    CVec Yf = CVec::Zero(config.n);
    for (Index a = 0; a < A; ++a) {
        CVec h = CVec::Zero(config.n);
        h.head(config.n_d) = channels.col(a);
        Yf += plan.pilot_spectra[static_cast<std::size_t>(a)].cwiseProduct(fft::dft(h));
    }
    CMat rx = fft::unitary_idft(Yf);
    return airmodel::awgn(rng, rx, config.snr1_db, cran_power_ref(config));
}

CMat terminal_compress(const CMat &rx, const linops::LinearMap *Phi_fb, Rng &rng, double snr2_db,
                       double power_ref) {
    if (!Phi_fb) return CMat(0, rx.cols());
    if (Phi_fb->cols() != rx.rows())
        throw std::invalid_argument("terminal_compress: Phi_fb columns != rx rows");
    CMat y(Phi_fb->rows(), rx.cols());
    for (Index q = 0; q < rx.cols(); ++q) y.col(q) = Phi_fb->apply(rx.col(q));
    return airmodel::awgn(rng, y, snr2_db, power_ref);
}

RecoveryResult bs_recover(const CMat &y_fb, const CranPlan &plan, const CranConfig &config) {
    const Index A = config.transmit_antennas();
    RecoveryResult out;
    out.channels = CMat::Zero(config.n_d, A);
    if (!plan.feedback || y_fb.rows() == 0) {
        out.converged = false;
        return out;
    }
    if (y_fb.rows() != plan.m_fb())
        throw std::invalid_argument("bs_recover: feedback length != m_fb");
    oneshot_ra::PilotDictionary D(plan.n, plan.feedback->window(), plan.pilot_spectra, config.n_d,
                                  1.0, all_antennas(A));
    const double sigma2 = airmodel::noise_variance(config.snr1_db, cran_power_ref(config)) +
                          airmodel::noise_variance(config.snr2_db, cran_power_ref(config));
    const double noise_norm = std::sqrt(double(D.rows()) * sigma2);
    const CVec y = y_fb.col(0);
    solvers::RecoveryReport r;
    if (config.recovery == Recovery::omp) {
        solvers::OmpOptions oo;
        oo.column_norms = D.column_norms();
        oo.residual_tolerance = std::max(noise_norm, 1e-10 * y.norm());
        const Index cap = std::max<Index>(1, std::min<Index>(D.rows() / 2, A * config.k1));
        r = solvers::omp(D, y, cap, oo);
    } else {
        r = solvers::bpdn(D, y, noise_norm);
    }
    out.converged = r.converged;
    for (Index a = 0; a < A; ++a) out.channels.col(a) = r.estimate.segment(a * config.n_d, config.n_d);
    return out;
}

CMat iq_quantize(const CMat &H, int bits_per_component) {
    if (bits_per_component < 1) throw std::invalid_argument("iq_quantize: bits must be >= 1");
    if (H.size() == 0) return H;
    const double sigma = std::sqrt(H.squaredNorm() / (2.0 * double(H.size())));
    if (sigma == 0.0) return CMat::Zero(H.rows(), H.cols());
    const double levels = std::ldexp(1.0, bits_per_component);
    const double step = 6.0 * sigma / levels;
    auto q = [&](double x) {
        const double idx = std::clamp(std::floor(x / step), -levels / 2.0, levels / 2.0 - 1.0);
        return (idx + 0.5) * step;
    };
    CMat out(H.rows(), H.cols());
    for (Index j = 0; j < H.cols(); ++j)
        for (Index i = 0; i < H.rows(); ++i) out(i, j) = cplx(q(H(i, j).real()), q(H(i, j).imag()));
    return out;
}

double degradation(double p_snr, double b, Index n_t, Regime regime) {
    if (n_t < 2) throw std::invalid_argument("degradation: n_t must be >= 2");
    if (!(b >= 0.0)) throw std::invalid_argument("degradation: b must be >= 0");
    if (!(p_snr >= 0.0)) throw std::invalid_argument("degradation: p must be >= 0");
    const double d = double(n_t - 1) * (regime == Regime::dof ? 1.0 : 2.0);
    return std::log1p(p_snr * std::exp2(-b / d));
}

ZfRate zf_sumrate(const std::vector<CMat> &estimates, const std::vector<CMat> &truth,
                  double snr_linear, Index n, Index subcarriers) {
    if (estimates.size() != truth.size() || truth.empty())
        throw std::invalid_argument("zf_sumrate: estimate and truth counts differ or are empty");
    const Index K = static_cast<Index>(truth.size());
    const Index A = truth[0].cols();
    if (K > A) throw std::invalid_argument("zf_sumrate: more users than transmit antennas");
    if (subcarriers < 1 || subcarriers > n) throw std::invalid_argument("zf_sumrate: bad subcarriers");
    for (Index i = 0; i < K; ++i) {
        const auto u = static_cast<std::size_t>(i);
        if (truth[u].cols() != A || estimates[u].cols() != A || estimates[u].rows() != truth[u].rows() ||
            truth[u].rows() > n)
            throw std::invalid_argument("zf_sumrate: channel shape mismatch");
    }
    // Frequency responses of all users and antennas at once.
    auto response = [&](const std::vector<CMat> &H) {
        std::vector<CMat> R(static_cast<std::size_t>(K));
        for (Index i = 0; i < K; ++i) {
            const CMat &h = H[static_cast<std::size_t>(i)];
            CMat Rf(n, A);
            for (Index a = 0; a < A; ++a) {
                CVec pad = CVec::Zero(n);
                pad.head(h.rows()) = h.col(a);
                Rf.col(a) = fft::dft(pad);
            }
            R[static_cast<std::size_t>(i)] = std::move(Rf);
        }
        return R;
    };
    const auto Rt = response(truth);
    const auto Re = response(estimates);
    const double P = snr_linear / double(K);
    ZfRate out;
    double total = 0.0;
    for (Index s = 0; s < subcarriers; ++s) {
        const Index f = s * n / subcarriers;
        CMat G(K, A), Gh(K, A);
        for (Index i = 0; i < K; ++i) {
            G.row(i) = Rt[static_cast<std::size_t>(i)].row(f);
            Gh.row(i) = Re[static_cast<std::size_t>(i)].row(f);
        }
        CMat M = Gh * Gh.adjoint();
        Eigen::SelfAdjointEigenSolver<CMat> eig(M);
        const double lmax = eig.eigenvalues().maxCoeff();
        CMat W = CMat::Zero(A, K);
        if (lmax > 0.0) {
            if (eig.eigenvalues().minCoeff() < 1e-10 * lmax) {
                out.regularized = true;
                M += 1e-10 * lmax * CMat::Identity(K, K);
            }
            W = Gh.adjoint() * M.ldlt().solve(CMat::Identity(K, K));
            for (Index j = 0; j < K; ++j) {
                const double nw = W.col(j).norm();
                if (nw > 0.0) W.col(j) /= nw;
            }
        }
        const CMat E = G * W;
        for (Index i = 0; i < K; ++i) {
            const double sig = std::norm(E(i, i));
            const double interference = E.row(i).squaredNorm() - sig;
            total += std::log2(1.0 + P * sig / (P * std::max(interference, 0.0) + 1.0));
        }
    }
    out.mean_rate = total / double(subcarriers);
    return out;
}

CranTrial run_cran_trial(const CranConfig &config, const CranPlan &plan, int iq_bits,
                         std::uint64_t seed) {
    config.validate();
    CranTrial t;
    t.seed = seed;
    Rng chan = Rng::stream(seed, kChannelStream);
    Rng noise = Rng::stream(seed, kNoiseStream);
    const Index A = config.transmit_antennas();
    const auto K = static_cast<std::size_t>(config.users);
    std::vector<CMat> truth(K), cs(K), iq(K), zero(K);
    for (std::size_t u = 0; u < K; ++u) {
        CMat H(config.n_d, A);
        for (Index b = 0; b < config.nodes; ++b)
            H.middleCols(b * config.antennas_per_node, config.antennas_per_node) =
                airmodel::gen_sparse_cir(chan, config.n_d, config.antennas_per_node, config.k1,
                                         airmodel::SupportMode::common);
        truth[u] = std::move(H);
    }
    const double pref = cran_power_ref(config);
    for (std::size_t u = 0; u < K; ++u) {
        const CMat rx = downlink_pilot_rx(config, plan, truth[u], noise);
        const CMat y = terminal_compress(rx, plan.feedback.get(), noise, config.snr2_db, pref);
        RecoveryResult r = bs_recover(y, plan, config);
        t.converged = t.converged && (r.converged || plan.m_fb() == 0);
        cs[u] = std::move(r.channels);
        iq[u] = iq_quantize(truth[u], iq_bits);
        zero[u] = CMat::Zero(config.n_d, A);
    }
    const double snr = std::pow(10.0, config.rate_snr_db / 10.0);
    t.rate_genie = zf_sumrate(truth, truth, snr, config.n, config.rate_subcarriers).mean_rate;
    t.rate_cs = zf_sumrate(cs, truth, snr, config.n, config.rate_subcarriers).mean_rate;
    t.rate_iq = zf_sumrate(iq, truth, snr, config.n, config.rate_subcarriers).mean_rate;
    t.rate_zero = zf_sumrate(zero, truth, snr, config.n, config.rate_subcarriers).mean_rate;
    t.mse_cs = relative_error(cs, truth);
    t.mse_iq = relative_error(iq, truth);
    return t;
}

std::string to_string(Recovery r) { return r == Recovery::omp ? "omp" : "bpdn"; }
std::string to_string(Regime r) { return r == Regime::dof ? "dof" : "finite_snr"; }

} // namespace sparse5g::cran_feedback
