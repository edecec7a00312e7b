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

#include "sparse5g/airmodel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sparse5g::airmodel {

namespace {

void require(bool ok, const std::string &what) {
    if (!ok) throw std::invalid_argument("FrameConfig: " + what);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

void FrameConfig::validate() const {
    require(n > 0, "n must be positive");
    require(m > 0 && m <= n, "m must lie in [1, n]");
    require(n_t > 0, "n_t must be positive");
    require(n_r > 0, "n_r must be positive");
    require(k0 >= 0 && k0 <= n_t, "k0 must lie in [0, n_t]");
    require(n_d > 0 && n_d <= n, "n_d must lie in [1, n]");
    require(k1 > 0 && k1 <= n_d, "k1 must lie in [1, n_d]");
    require(k2 >= 0 && k2 <= n, "k2 must lie in [0, n]");
    require(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0, 1]");
    require(!std::isnan(snr_db), "snr_db must not be NaN");
    require(payload_bits >= 0, "payload_bits must be >= 0");
}

std::uint64_t Rng::derive(std::uint64_t root, std::uint64_t index) {
    return splitmix64(splitmix64(root) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

Rng Rng::stream(std::uint64_t root, std::uint64_t index) { return Rng(derive(root, index)); }

cplx Rng::cnormal(double variance) {
    const double s = std::sqrt(variance / 2.0);
    const double re = normal_(engine_);
    const double im = normal_(engine_);
    return {s * re, s * im};
}

CVec Rng::cnormal_vector(Index n, double variance) {
    CVec v(n);
    for (Index i = 0; i < n; ++i) v(i) = cnormal(variance);
    return v;
}

std::vector<Index> Rng::subset(Index n, Index k) {
    if (k < 0 || k > n) throw std::invalid_argument("Rng::subset: k must lie in [0, n]");
    // Partial Fisher-Yates over an index table.
    std::vector<Index> pool(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
    for (Index i = 0; i < k; ++i) {
        const Index j = i + index(n - i);
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    }
    pool.resize(static_cast<std::size_t>(k));
    std::sort(pool.begin(), pool.end());
    return pool;
}

CMat gen_sparse_cir(Rng &rng, Index n_d, Index n_r, Index k1, SupportMode mode) {
    if (k1 < 1 || k1 > n_d || n_r < 1)
        throw std::invalid_argument("gen_sparse_cir: need 1 <= k1 <= n_d and n_r >= 1");
    auto draw_support = [&] {
        std::vector<Index> late = rng.subset(n_d - 1, k1 - 1);
        std::vector<Index> s{0};
        for (Index t : late) s.push_back(t + 1);
        return s;
    };
    CMat H = CMat::Zero(n_d, n_r);
    std::vector<Index> support = draw_support();
    const double var = 1.0 / double(k1);
    for (Index q = 0; q < n_r; ++q) {
        if (mode == SupportMode::independent && q > 0) support = draw_support();
        for (Index t : support) H(t, q) = rng.cnormal(var);
    }
    return H;
}

std::vector<Index> gen_activity(Rng &rng, Index n_t, Index k0) {
    if (k0 < 0 || k0 > n_t) throw std::invalid_argument("gen_activity: need 0 <= k0 <= n_t");
    return rng.subset(n_t, k0);
}

double noise_variance(double snr_db, double power_ref) {
    if (snr_db == kNoiseless) return 0.0;
    return power_ref / std::pow(10.0, snr_db / 10.0);
}

CVec awgn(Rng &rng, const CVec &signal, double snr_db, double power_ref) {
    if (std::isnan(snr_db) || snr_db == -kNoiseless)
        throw std::invalid_argument("awgn: snr_db must be finite or +inf");
    if (snr_db == kNoiseless) return signal;
    return signal + rng.cnormal_vector(signal.size(), noise_variance(snr_db, power_ref));
}

CMat awgn(Rng &rng, const CMat &signal, double snr_db, double power_ref) {
    if (std::isnan(snr_db) || snr_db == -kNoiseless)
        throw std::invalid_argument("awgn: snr_db must be finite or +inf");
    if (snr_db == kNoiseless) return signal;
    const double var = noise_variance(snr_db, power_ref);
    CMat out = signal;
    for (Index j = 0; j < out.cols(); ++j)
        for (Index i = 0; i < out.rows(); ++i) out(i, j) += rng.cnormal(var);
    return out;
}

Bits random_bits(Rng &rng, Index count) {
    Bits b(static_cast<std::size_t>(count));
    for (auto &x : b) x = rng.bit() ? 1 : 0;
    return b;
}

CVec bpsk(const Bits &bits) {
    CVec s(static_cast<Index>(bits.size()));
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] > 1) throw std::invalid_argument("bpsk: bits must be 0 or 1");
        s(static_cast<Index>(i)) = bits[i] ? -1.0 : 1.0;
    }
    return s;
}

Bits bpsk_demap(const CVec &symbols) {
    Bits b(static_cast<std::size_t>(symbols.size()));
    for (Index i = 0; i < symbols.size(); ++i) b[static_cast<std::size_t>(i)] = symbols(i).real() < 0.0;
    return b;
}

CMat perturb(const CMat &Y, PerturbMode mode, Rng &rng, double magnitude) {
    if (!(magnitude >= 0.0)) throw std::invalid_argument("perturb: magnitude must be >= 0");
    if (magnitude == 0.0) return Y;
    if (mode == PerturbMode::phase) {
        CMat out = Y;
        for (Index j = 0; j < Y.cols(); ++j)
            for (Index i = 0; i < Y.rows(); ++i)
                out(i, j) *= std::polar(1.0, rng.uniform(-magnitude * kPi, magnitude * kPi));
        return out;
    }
    CVec u = rng.cnormal_vector(Y.rows());
    CVec v = rng.cnormal_vector(Y.cols());
    u.normalize();
    v.normalize();
    const double scale = std::sqrt(magnitude) * Y.norm();
    return Y + scale * u * v.adjoint();
}

CVec perturb(const CVec &y, PerturbMode mode, Rng &rng, double magnitude) {
    CMat Y = y;
    return perturb(Y, mode, rng, magnitude).col(0);
}

} // namespace sparse5g::airmodel
