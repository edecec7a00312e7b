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

#include "sparse5g/seckey.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sparse5g::seckey {

namespace {

constexpr std::uint64_t kChannelStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kEveStream = 3;

void push_gray(Bits &out, std::uint32_t index, int width) {
    const std::uint32_t g = index ^ (index >> 1);
    for (int b = width - 1; b >= 0; --b) out.push_back(static_cast<std::uint8_t>((g >> b) & 1u));
}

std::uint32_t bin(double v, int width) {
    const double levels = std::ldexp(1.0, width);
    return static_cast<std::uint32_t>(std::clamp(std::floor(v * levels), 0.0, levels - 1.0));
}

double binary_entropy(double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

} // namespace

void SeckeyConfig::validate() const {
    if (bits_per_tap < 1 || bits_per_tap > 16)
        throw std::invalid_argument("seckey: bits_per_tap must be in [1, 16]");
    network().validate();
    if (m_fb < 1 || m_fb > n) throw std::invalid_argument("seckey: m_fb must be in [1, n]");
}

cran_feedback::CranConfig SeckeyConfig::network() const {
    cran_feedback::CranConfig c;
    c.n = n;
    c.nodes = 1;
    c.antennas_per_node = antennas;
    c.users = 1;
    c.n_d = n_d;
    c.k1 = k1;
    c.snr1_db = snr1_db;
    c.snr2_db = snr2_db;
    c.rate_subcarriers = 1;
    c.recovery = recovery;
    c.plan_seed = plan_seed;
    return c;
}

KeyMaterial key_from_channel(const CMat &H, Index k1, int bits_per_tap) {
    if (k1 < 1 || k1 > H.rows()) throw std::invalid_argument("key_from_channel: k1 out of range");
    if (bits_per_tap < 1 || bits_per_tap > 16)
        throw std::invalid_argument("key_from_channel: bits_per_tap must be in [1, 16]");
    KeyMaterial key;
    if (H.squaredNorm() == 0.0) {
        key.empty = true;
        return key;
    }
    const int phase_bits = (bits_per_tap + 1) / 2;
    const int mag_bits = bits_per_tap / 2;
    for (Index a = 0; a < H.cols(); ++a) {
        std::vector<Index> idx(static_cast<std::size_t>(H.rows()));
        std::iota(idx.begin(), idx.end(), Index{0});
        std::stable_sort(idx.begin(), idx.end(),
                         [&](Index x, Index y) { return std::abs(H(x, a)) > std::abs(H(y, a)); });
        idx.resize(static_cast<std::size_t>(k1));
        std::sort(idx.begin(), idx.end());
        double energy = 0.0;
        for (Index t : idx) energy += std::norm(H(t, a));
        for (Index t : idx) {
            const cplx h = H(t, a);
            key.source_taps.push_back(h);
            double phase = std::arg(h);
            if (phase < 0.0) phase += 2.0 * kPi;
            push_gray(key.bits, bin(phase / (2.0 * kPi), phase_bits), phase_bits);
            if (mag_bits > 0) {
                const double u = energy > 0.0 ? std::norm(h) / energy : 0.0;
                const double v = 1.0 - std::pow(1.0 - u, double(k1 - 1));
                push_gray(key.bits, bin(v, mag_bits), mag_bits);
            }
        }
    }
    return key;
}

double key_disagreement(const Bits &a, const Bits &b) {
    if (a.empty() && b.empty()) return 0.0;
    if (a.empty() || b.empty()) return 0.5;
    if (a.size() != b.size()) throw std::invalid_argument("key_disagreement: key lengths differ");
    std::size_t diff = 0;
    for (std::size_t i = 0; i < a.size(); ++i) diff += a[i] != b[i];
    return double(diff) / double(a.size());
}

double key_entropy(const std::vector<Bits> &keys) {
    if (keys.empty()) return 0.0;
    const std::size_t len = keys.front().size();
    std::vector<long> ones(len, 0);
    for (const Bits &k : keys) {
        if (k.size() != len) throw std::invalid_argument("key_entropy: key lengths differ");
        for (std::size_t i = 0; i < len; ++i) ones[i] += k[i];
    }
    double h = 0.0;
    for (long c : ones) h += binary_entropy(double(c) / double(keys.size()));
    return h;
}

double equal_energy_rank_one(double phase_magnitude) {
    if (!(phase_magnitude >= 0.0))
        throw std::invalid_argument("equal_energy_rank_one: magnitude must be >= 0");
    if (phase_magnitude == 0.0) return 0.0;
    // E|e^{i theta} - 1|^2 for theta uniform on [-pi m, pi m].
    const double x = kPi * phase_magnitude;
    return 2.0 * (1.0 - std::sin(x) / x);
}

KeygenResult keygen_experiment(const SeckeyConfig &config, const cran_feedback::CranPlan &plan,
                               PerturbMode mode, double magnitude, std::uint64_t seed) {
    config.validate();
    const cran_feedback::CranConfig net = config.network();
    if (plan.m_fb() != config.m_fb || plan.n != config.n)
        throw std::invalid_argument("keygen_experiment: plan does not match config");
    Rng chan = Rng::stream(seed, kChannelStream);
    Rng noise = Rng::stream(seed, kNoiseStream);
    Rng eve = Rng::stream(seed, kEveStream);
    const CMat H = airmodel::gen_sparse_cir(chan, config.n_d, config.antennas, config.k1,
                                            airmodel::SupportMode::common);
    const CMat rx = cran_feedback::downlink_pilot_rx(net, plan, H, noise);
    const CMat y = cran_feedback::terminal_compress(rx, plan.feedback.get(), noise, config.snr2_db,
                                                    cran_feedback::cran_power_ref(net));
    const CMat y_eve = airmodel::perturb(y, mode, eve, magnitude);
    const auto bob = cran_feedback::bs_recover(y, plan, net);
    const auto ev = cran_feedback::bs_recover(y_eve, plan, net);

    KeygenResult r;
    r.converged = bob.converged && ev.converged;
    const double energy = H.squaredNorm();
    r.mse_bob = (bob.channels - H).squaredNorm() / energy;
    r.mse_eve = (ev.channels - H).squaredNorm() / energy;
    const KeyMaterial ref = key_from_channel(H, config.k1, config.bits_per_tap);
    const KeyMaterial kb = key_from_channel(bob.channels, config.k1, config.bits_per_tap);
    const KeyMaterial ke = key_from_channel(ev.channels, config.k1, config.bits_per_tap);
    r.kdr_bob = key_disagreement(kb.bits, ref.bits);
    r.kdr_eve = key_disagreement(ke.bits, ref.bits);
    r.eve_key_empty = ke.empty;
    r.reference_key = ref.bits;
    return r;
}

} // namespace sparse5g::seckey
