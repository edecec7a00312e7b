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

#include "sparse5g/oneshot_ra.hpp"

#include "sparse5g/fft.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sparse5g::oneshot_ra {

namespace {

constexpr std::uint64_t kPilotStream = 0x9110;
constexpr std::uint64_t kWindowStream = 0x3d0;

std::vector<Index> make_window(const OneshotConfig &c) {
    const Index n = c.frame.n, m = c.frame.m;
    switch (c.layout) {
    case WindowLayout::contiguous:
        return linops::centered_window(n, m);
    case WindowLayout::comb:
        return linops::comb_window(n, m, 0);
    case WindowLayout::random: {
        Rng rng = Rng::stream(c.plan_seed, kWindowStream);
        return rng.subset(n, m);
    }
    }
    throw std::logic_error("unknown window layout");
}

/// Unnormalized DFT of h zero-padded to length n, i.e. the channel gain on
/// every bin.
CVec channel_response(const CVec &h, Index n) {
    CVec padded = CVec::Zero(n);
    padded.head(h.size()) = h;
    return fft::dft(padded);
}

std::vector<Index> all_users(Index n_t) {
    std::vector<Index> u(static_cast<std::size_t>(n_t));
    for (Index p = 0; p < n_t; ++p) u[static_cast<std::size_t>(p)] = p;
    return u;
}

} // namespace

void OneshotConfig::validate() const {
    frame.validate();
    if (frame.payload_bits > frame.k2)
        throw std::invalid_argument("FrameConfig: slot overflow, payload_bits " +
                                    std::to_string(frame.payload_bits) + " exceeds slot size k2 " +
                                    std::to_string(frame.k2));
    if (!(threshold >= 0.0)) throw std::invalid_argument("oneshot: threshold must be >= 0");
    if (refine_passes < 0) throw std::invalid_argument("oneshot: refine_passes must be >= 0");
}

CVec FramePlan::pilot(Index p) const {
    return fft::unitary_idft(pilot_spectra.at(static_cast<std::size_t>(p)));
}

double FramePlan::overhead() const { return double(measurement->rows()) / double(n); }

FramePlan make_plan(const OneshotConfig &config) {
    config.validate();
    const FrameConfig &f = config.frame;
    FramePlan plan;
    plan.n = f.n;
    plan.setting = config.setting;
    std::vector<Index> window = make_window(config);
    plan.measurement = linops::subsampled_dft(f.n, window);

    Rng rng = Rng::stream(config.plan_seed, kPilotStream);
    for (Index p = 0; p < f.n_t; ++p) {
        CVec P = CVec::Zero(f.n);
        if (config.setting == PilotSetting::underlay) {
            const double a = 1.0 / std::sqrt(double(f.n));
            for (Index b = 0; b < f.n; ++b) P(b) = std::polar(a, rng.uniform(0.0, 2.0 * kPi));
        } else {
            const double a = 1.0 / std::sqrt(double(f.m));
            for (Index b : window) P(b) = std::polar(a, rng.uniform(0.0, 2.0 * kPi));
        }
        plan.pilot_spectra.push_back(std::move(P));
    }

    std::vector<bool> in_window(static_cast<std::size_t>(f.n), false);
    for (Index b : window) in_window[static_cast<std::size_t>(b)] = true;
    std::vector<Index> data_bins;
    for (Index b = 0; b < f.n; ++b)
        if (!in_window[static_cast<std::size_t>(b)]) data_bins.push_back(b);

    plan.slots.assign(static_cast<std::size_t>(f.n_t), {});
    if (f.k2 > 0) {
        plan.slot_count = static_cast<Index>(data_bins.size()) / f.k2;
        if (plan.slot_count == 0)
            throw std::invalid_argument("FrameConfig: slot overflow, " +
                                        std::to_string(data_bins.size()) +
                                        " data bins cannot hold a slot of k2 " +
                                        std::to_string(f.k2));
        // Users beyond slot_count share slots modulo slot_count.
        for (Index p = 0; p < f.n_t; ++p) {
            const Index s = p % plan.slot_count;
            auto first = data_bins.begin() + s * f.k2;
            plan.slots[static_cast<std::size_t>(p)].assign(first, first + f.k2);
        }
    }
    return plan;
}

PilotDictionary::PilotDictionary(const FramePlan &plan, Index n_d, double alpha,
                                 std::vector<Index> users)
    : PilotDictionary(plan.n, plan.measurement->window(), plan.pilot_spectra, n_d,
                      std::sqrt(alpha), std::move(users)) {}

PilotDictionary::PilotDictionary(Index n, const std::vector<Index> &window,
                                 const std::vector<CVec> &spectra, Index n_d, double scale,
                                 std::vector<Index> users)
    : n_d_(n_d), users_(std::move(users)) {
    const Index m = static_cast<Index>(window.size());
    G_.resize(m, n_d);
    for (Index i = 0; i < m; ++i)
        for (Index t = 0; t < n_d; ++t) {
            // Reduce the phase index modulo n before scaling to keep it exact.
            const Index k = (window[static_cast<std::size_t>(i)] * t) % n;
            G_(i, t) = std::polar(1.0, -2.0 * kPi * double(k) / double(n));
        }
    weights_.resize(m, static_cast<Index>(users_.size()));
    for (std::size_t u = 0; u < users_.size(); ++u) {
        if (users_[u] < 0 || users_[u] >= static_cast<Index>(spectra.size()))
            throw std::invalid_argument("PilotDictionary: user out of range");
        const CVec &P = spectra[static_cast<std::size_t>(users_[u])];
        if (P.size() != n) throw std::invalid_argument("PilotDictionary: spectrum length != n");
        for (Index i = 0; i < m; ++i)
            weights_(i, static_cast<Index>(u)) = scale * P(window[static_cast<std::size_t>(i)]);
    }
}

CVec PilotDictionary::forward(const CVec &x) const {
    const Index U = static_cast<Index>(users_.size());
    Eigen::Map<const CMat> X(x.data(), n_d_, U);
    CMat GX = G_ * X;
    return (GX.array() * weights_.array()).rowwise().sum();
}

CVec PilotDictionary::adjoint(const CVec &y) const {
    CMat Z = weights_.conjugate();
    Z.array().colwise() *= y.array();
    CMat out = G_.adjoint() * Z;
    return Eigen::Map<const CVec>(out.data(), out.size());
}

CVec PilotDictionary::column(Index j) const {
    if (j < 0 || j >= cols()) throw std::out_of_range("PilotDictionary::column");
    const Index u = j / n_d_, t = j % n_d_;
    return weights_.col(u).cwiseProduct(G_.col(t));
}

RVec PilotDictionary::column_norms() const {
    RVec norms(cols());
    for (Index u = 0; u < static_cast<Index>(users_.size()); ++u)
        norms.segment(u * n_d_, n_d_).setConstant(weights_.col(u).norm());
    return norms;
}

FrameTruth draw_truth(const OneshotConfig &config, const FramePlan &plan, Rng &rng) {
    const FrameConfig &f = config.frame;
    FrameTruth t;
    t.active = airmodel::gen_activity(rng, f.n_t, f.k0);
    t.channels.assign(static_cast<std::size_t>(f.n_t), CMat::Zero(f.n_d, f.n_r));
    t.bits.assign(static_cast<std::size_t>(f.n_t), {});
    for (Index p : t.active) {
        t.channels[static_cast<std::size_t>(p)] =
            airmodel::gen_sparse_cir(rng, f.n_d, f.n_r, f.k1, config.support);
        t.bits[static_cast<std::size_t>(p)] = airmodel::random_bits(rng, f.payload_bits);
    }
    (void)plan;
    return t;
}

double frame_noise_variance(const FrameConfig &config) {
    // Reference: mean received power per sample with unit-energy users and
    // unit-energy channels; a silent frame is referenced to one user.
    const double power_ref = double(std::max<Index>(config.k0, 1)) / double(config.n);
    return airmodel::noise_variance(config.snr_db, power_ref);
}

CMat build_frame(const FrameConfig &config, const FramePlan &plan, const FrameTruth &truth,
                 Rng &rng) {
    const Index n = config.n;
    if (plan.n != n) throw std::invalid_argument("build_frame: plan length differs from config n");
    CMat Yf = CMat::Zero(n, config.n_r);
    const double sa = std::sqrt(config.alpha);
    const double sd = std::sqrt(1.0 - config.alpha);
    for (Index p : truth.active) {
        const auto up = static_cast<std::size_t>(p);
        const Bits &bits = truth.bits[up];
        const auto &slot = plan.slots[up];
        if (bits.size() > slot.size())
            throw std::invalid_argument("build_frame: slot overflow for user " + std::to_string(p));
        CVec T = sa * plan.pilot_spectra[up];
        if (!bits.empty()) {
            const double amp = sd / std::sqrt(double(bits.size()));
            for (std::size_t i = 0; i < bits.size(); ++i) T(slot[i]) += bits[i] ? -amp : amp;
        }
        const CMat &H = truth.channels[up];
        if (H.rows() != config.n_d || H.cols() != config.n_r)
            throw std::invalid_argument("build_frame: channel shape mismatch for user " +
                                        std::to_string(p));
        for (Index q = 0; q < config.n_r; ++q)
            Yf.col(q) += T.cwiseProduct(channel_response(H.col(q), n));
    }
    CMat Y(n, config.n_r);
    for (Index q = 0; q < config.n_r; ++q) Y.col(q) = fft::unitary_idft(Yf.col(q));
    const double power_ref = double(std::max<Index>(config.k0, 1)) / double(n);
    return airmodel::awgn(rng, Y, config.snr_db, power_ref);
}

CMat prach_measure(const CMat &Y, const FramePlan &plan) {
    if (Y.rows() != plan.measurement->cols())
        throw std::invalid_argument("prach_measure: frame length " + std::to_string(Y.rows()) +
                                    " != plan n " + std::to_string(plan.measurement->cols()));
    CMat out(plan.measurement->rows(), Y.cols());
    for (Index q = 0; q < Y.cols(); ++q) out.col(q) = plan.measurement->apply(Y.col(q));
    return out;
}

std::vector<Index> apply_threshold(const std::vector<double> &scores, double threshold) {
    std::vector<Index> out;
    for (std::size_t p = 0; p < scores.size(); ++p)
        if (scores[p] >= threshold) out.push_back(static_cast<Index>(p));
    return out;
}

namespace {

struct PerAntennaFit {
    std::vector<CMat> channels; // per listed user, n_d x n_r
    bool converged = true;
};

PerAntennaFit sparse_fit(const CMat &y_meas, const std::vector<Index> &users,
                         const FramePlan &plan, const OneshotConfig &config) {
    const FrameConfig &f = config.frame;
    PerAntennaFit fit;
    fit.channels.assign(users.size(), CMat::Zero(f.n_d, f.n_r));
    if (users.empty()) return fit;
    PilotDictionary A(plan, f.n_d, f.alpha, users);
    const double sigma2 = frame_noise_variance(f);
    const double noise_norm = std::sqrt(double(A.rows()) * sigma2);
    solvers::OmpOptions oo;
    oo.column_norms = A.column_norms();
    const Index cap = std::min<Index>(A.rows() / 2, static_cast<Index>(users.size()) * f.k1);
    for (Index q = 0; q < f.n_r; ++q) {
        const CVec y = y_meas.col(q);
        solvers::RecoveryReport r;
        if (config.solver == ChannelSolver::omp) {
            oo.residual_tolerance = std::max(noise_norm, 1e-10 * y.norm());
            r = solvers::omp(A, y, cap, oo);
        } else {
            r = solvers::bpdn(A, y, noise_norm);
        }
        fit.converged = fit.converged && r.converged;
        for (std::size_t u = 0; u < users.size(); ++u)
            fit.channels[u].col(q) = r.estimate.segment(static_cast<Index>(u) * f.n_d, f.n_d);
    }
    return fit;
}

} // namespace

Detection detect_users(const CMat &y_meas, const FramePlan &plan, const OneshotConfig &config,
                       double threshold) {
    if (!(threshold >= 0.0)) throw std::invalid_argument("detect_users: threshold must be >= 0");
    const FrameConfig &f = config.frame;
    if (y_meas.rows() != plan.measurement->rows() || y_meas.cols() != f.n_r)
        throw std::invalid_argument("detect_users: measurement shape mismatch");
    Detection d;
    d.scores.assign(static_cast<std::size_t>(f.n_t), 0.0);
    const std::vector<Index> users = all_users(f.n_t);
    if (config.detector == Detector::cs) {
        PerAntennaFit fit = sparse_fit(y_meas, users, plan, config);
        d.converged = fit.converged;
        for (std::size_t p = 0; p < users.size(); ++p)
            d.scores[p] = fit.channels[p].squaredNorm() / double(f.n_r);
    } else {
        PilotDictionary A(plan, f.n_d, f.alpha, users);
        const RVec norms = A.column_norms();
        for (Index q = 0; q < f.n_r; ++q) {
            const CVec c = A.apply_adjoint(y_meas.col(q));
            for (Index p = 0; p < f.n_t; ++p) {
                const double a2 = norms(p * f.n_d) * norms(p * f.n_d);
                if (a2 > 0.0)
                    d.scores[static_cast<std::size_t>(p)] +=
                        c.segment(p * f.n_d, f.n_d).squaredNorm() / (a2 * a2) / double(f.n_r);
            }
        }
    }
    d.detected = apply_threshold(d.scores, threshold);
    return d;
}

ChannelEstimate estimate_channels(const CMat &y_meas, const std::vector<Index> &detected,
                                  const FramePlan &plan, const OneshotConfig &config) {
    const FrameConfig &f = config.frame;
    ChannelEstimate est;
    est.channels.assign(static_cast<std::size_t>(f.n_t), CMat());
    for (Index p : detected)
        if (p < 0 || p >= f.n_t)
            throw std::invalid_argument("estimate_channels: user " + std::to_string(p) +
                                        " out of range");
    if (detected.empty()) return est;
    PerAntennaFit fit = sparse_fit(y_meas, detected, plan, config);
    est.converged = fit.converged;
    for (std::size_t u = 0; u < detected.size(); ++u)
        est.channels[static_cast<std::size_t>(detected[u])] = std::move(fit.channels[u]);
    return est;
}

std::vector<Bits> demodulate(const CMat &Y, const std::vector<CMat> &channels,
                             const FramePlan &plan, const FrameConfig &config) {
    const Index n = config.n;
    if (Y.rows() != n || Y.cols() != config.n_r)
        throw std::invalid_argument("demodulate: frame shape mismatch");
    CMat Yf(n, config.n_r);
    for (Index q = 0; q < config.n_r; ++q) Yf.col(q) = fft::unitary_dft(Y.col(q));

    const double sa = std::sqrt(config.alpha);
    std::vector<CMat> response(channels.size());
    for (std::size_t p = 0; p < channels.size(); ++p) {
        if (channels[p].size() == 0) continue;
        response[p].resize(n, config.n_r);
        for (Index q = 0; q < config.n_r; ++q) {
            response[p].col(q) = channel_response(channels[p].col(q), n);
            // Known pilots are removed before equalization.
            Yf.col(q) -= sa * plan.pilot_spectra[p].cwiseProduct(response[p].col(q));
        }
    }

    std::vector<Bits> bits(channels.size());
    for (std::size_t p = 0; p < channels.size(); ++p) {
        if (channels[p].size() == 0) continue;
        const auto &slot = plan.slots[p];
        const std::size_t count = std::min<std::size_t>(slot.size(), std::size_t(config.payload_bits));
        CVec z(static_cast<Index>(count));
        for (std::size_t i = 0; i < count; ++i) {
            cplx acc = 0.0;
            for (Index q = 0; q < config.n_r; ++q)
                acc += std::conj(response[p](slot[i], q)) * Yf(slot[i], q);
            z(static_cast<Index>(i)) = acc;
        }
        bits[p] = airmodel::bpsk_demap(z);
    }
    return bits;
}

std::vector<CMat> refine_channels(const CMat &Y, const std::vector<CMat> &channels,
                                  const std::vector<Bits> &bits, const FramePlan &plan,
                                  const FrameConfig &config) {
    const Index n = config.n;
    if (Y.rows() != n || Y.cols() != config.n_r)
        throw std::invalid_argument("refine_channels: frame shape mismatch");
    if (bits.size() != channels.size())
        throw std::invalid_argument("refine_channels: bits and channels differ in length");
    const double sa = std::sqrt(config.alpha);
    const double sd = std::sqrt(1.0 - config.alpha);
    std::vector<CVec> tx(channels.size());
    for (std::size_t p = 0; p < channels.size(); ++p) {
        if (channels[p].size() == 0) continue;
        tx[p] = sa * plan.pilot_spectra[p];
        const Bits &b = bits[p];
        if (b.empty()) continue;
        const double amp = sd / std::sqrt(double(b.size()));
        for (std::size_t i = 0; i < b.size() && i < plan.slots[p].size(); ++i)
            tx[p](plan.slots[p][i]) += b[i] ? -amp : amp;
    }
    std::vector<CMat> out = channels;
    for (Index q = 0; q < config.n_r; ++q) {
        std::vector<std::pair<std::size_t, Index>> atoms;
        for (std::size_t p = 0; p < channels.size(); ++p)
            for (Index t = 0; t < channels[p].rows() && channels[p].size(); ++t)
                if (channels[p](t, q) != cplx(0.0, 0.0)) atoms.emplace_back(p, t);
        if (atoms.empty()) continue;
        CMat A(n, static_cast<Index>(atoms.size()));
        for (std::size_t j = 0; j < atoms.size(); ++j) {
            const auto [p, t] = atoms[j];
            for (Index f = 0; f < n; ++f)
                A(f, static_cast<Index>(j)) =
                    tx[p](f) * std::polar(1.0, -2.0 * kPi * double((f * t) % n) / double(n));
        }
        const CVec yf = fft::unitary_dft(Y.col(q));
        Eigen::ColPivHouseholderQR<CMat> qr(A);
        if (qr.rank() < A.cols()) continue;
        const CVec x = qr.solve(yf);
        for (std::size_t j = 0; j < atoms.size(); ++j)
            out[atoms[j].first](atoms[j].second, q) = x(static_cast<Index>(j));
    }
    return out;
}

std::optional<double> TrialResult::channel_mse() const {
    if (channel_energy <= 0.0) return std::nullopt;
    return channel_error / channel_energy;
}

TrialResult run_trial(const OneshotConfig &config, const FramePlan &plan, std::uint64_t seed) {
    const FrameConfig &f = config.frame;
    TrialResult res;
    res.seed = seed;
    Rng rng(seed);
    FrameTruth truth = draw_truth(config, plan, rng);
    res.active = truth.active;
    for (Index p : truth.active) res.channel_energy += truth.channels[static_cast<std::size_t>(p)].squaredNorm();

    std::vector<Bits> est_bits(static_cast<std::size_t>(f.n_t));
    std::vector<CMat> est_channels(static_cast<std::size_t>(f.n_t));
    CMat Y;
    try {
        Y = build_frame(f, plan, truth, rng);
        const CMat y = prach_measure(Y, plan);
        Detection det = detect_users(y, plan, config, config.threshold);
        res.detected = det.detected;
        res.scores = det.scores;
        ChannelEstimate est = estimate_channels(y, det.detected, plan, config);
        res.converged = det.converged && est.converged;
        est_channels = std::move(est.channels);
        est_bits = demodulate(Y, est_channels, plan, f);
        for (int pass = 0; pass < config.refine_passes; ++pass) {
            est_channels = refine_channels(Y, est_channels, est_bits, plan, f);
            est_bits = demodulate(Y, est_channels, plan, f);
        }
    } catch (const std::exception &e) {
        res.converged = false;
        res.diagnostics = e.what();
        est_bits.assign(static_cast<std::size_t>(f.n_t), {});
        est_channels.assign(static_cast<std::size_t>(f.n_t), CMat());
    }

    for (Index p : truth.active) {
        const auto up = static_cast<std::size_t>(p);
        if (est_bits[up].size() != truth.bits[up].size())
            est_bits[up].assign(truth.bits[up].size(), 0);
        const CMat &H = truth.channels[up];
        res.channel_error += est_channels[up].size() ? (est_channels[up] - H).squaredNorm()
                                                     : H.squaredNorm();
    }
    res.symbols = metrics::count_symbol_errors(est_bits, truth.bits, truth.active);

    if (Y.size() > 0) {
        std::vector<CMat> genie(static_cast<std::size_t>(f.n_t));
        for (Index p : truth.active)
            genie[static_cast<std::size_t>(p)] = truth.channels[static_cast<std::size_t>(p)];
        std::vector<Bits> gb = demodulate(Y, genie, plan, f);
        res.genie_symbols = metrics::count_symbol_errors(gb, truth.bits, truth.active);
    }
    return res;
}

FlatFadingResult svd_flatfading_detect(const CMat &Y, const std::vector<CVec> &pilots,
                                       double noise_variance) {
    const Index n = Y.rows(), n_r = Y.cols();
    for (const CVec &s : pilots)
        if (s.size() != n) throw std::invalid_argument("svd_flatfading_detect: pilot length");
    if (!(noise_variance >= 0.0))
        throw std::invalid_argument("svd_flatfading_detect: noise variance must be >= 0");
    FlatFadingResult out;
    out.signatures.assign(pilots.size(), std::nullopt);
    out.correlations.assign(pilots.size(), 0.0);

    Eigen::JacobiSVD<CMat> svd(Y, Eigen::ComputeThinU);
    out.singular_values = svd.singularValues();
    const double top = out.singular_values.size() ? out.singular_values(0) : 0.0;
    // Largest singular value of an n x n_r noise matrix concentrates at
    // sigma (sqrt n + sqrt n_r).
    const double edge = std::sqrt(double(n)) + std::sqrt(double(n_r));
    out.floor = noise_variance > 0.0 ? 1.1 * noise_variance * edge * edge : 1e-20 * top * top;
    Index r = 0;
    while (r < out.singular_values.size() && out.singular_values(r) * out.singular_values(r) > out.floor &&
           out.singular_values(r) > 0.0)
        ++r;
    out.significant = r;
    if (r == 0 || pilots.empty()) return out;

    const CMat U = svd.matrixU().leftCols(r);
    for (std::size_t p = 0; p < pilots.size(); ++p) {
        const double e = pilots[p].squaredNorm();
        out.correlations[p] = e > 0.0 ? (U.adjoint() * pilots[p]).squaredNorm() / e : 0.0;
    }
    std::vector<std::size_t> order(pilots.size());
    for (std::size_t p = 0; p < order.size(); ++p) order[p] = p;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return out.correlations[a] > out.correlations[b];
    });
    std::vector<std::size_t> matched;
    for (std::size_t i = 0; i < order.size() && static_cast<Index>(matched.size()) < r; ++i)
        if (out.correlations[order[i]] > 0.5) matched.push_back(order[i]);
    if (matched.empty()) return out;

    CMat S(n, static_cast<Index>(matched.size()));
    for (std::size_t i = 0; i < matched.size(); ++i) S.col(static_cast<Index>(i)) = pilots[matched[i]];
    const CMat Hhat = S.colPivHouseholderQr().solve(Y);
    for (std::size_t i = 0; i < matched.size(); ++i)
        out.signatures[matched[i]] = CVec(Hhat.row(static_cast<Index>(i)).transpose());
    return out;
}

std::string to_string(PilotSetting s) { return s == PilotSetting::underlay ? "underlay" : "separated"; }
std::string to_string(WindowLayout w) {
    switch (w) {
    case WindowLayout::contiguous: return "contiguous";
    case WindowLayout::comb: return "comb";
    case WindowLayout::random: return "random";
    }
    return "?";
}
std::string to_string(Detector d) { return d == Detector::cs ? "cs" : "correlation"; }
std::string to_string(ChannelSolver s) { return s == ChannelSolver::omp ? "omp" : "bpdn"; }

} // namespace sparse5g::oneshot_ra
