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

#include "sparse5g/types.hpp"

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace sparse5g::airmodel {

struct FrameConfig {
    Index n = 2048;
    Index m = 128;
    Index n_t = 16;
    Index n_r = 1;
    Index n_d = 64;
    Index k0 = 4;
    Index k1 = 4;
    /// Nonzero data symbols in a user slot. Equal to payload_bits for BPSK.
    Index k2 = 64;
    double alpha = 0.5;
    double snr_db = 20.0;
    Index payload_bits = 64;

    /// Throws std::invalid_argument naming the first violated constraint.
    void validate() const;
};

/// Seeded generator. Streams derived from (root, index) are independent
/// and reproducible regardless of evaluation order.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    static Rng stream(std::uint64_t root, std::uint64_t index);
    static std::uint64_t derive(std::uint64_t root, std::uint64_t index);

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }
    double normal() { return normal_(engine_); }
    /// Circularly symmetric complex Gaussian with E|z|^2 = variance.
    cplx cnormal(double variance = 1.0);
    CVec cnormal_vector(Index n, double variance = 1.0);
    Index index(Index n) { return std::uniform_int_distribution<Index>(0, n - 1)(engine_); }
    bool bit() { return (engine_() >> 63) != 0; }
    /// Uniform random k-subset of [0, n), ascending.
    std::vector<Index> subset(Index n, Index k);
    std::mt19937_64 &engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
};

enum class SupportMode { common, independent };

/// n_d x n_r matrix; each column has k1 nonzero CN(0, 1/k1) taps, tap 0
/// always among them.
CMat gen_sparse_cir(Rng &rng, Index n_d, Index n_r, Index k1, SupportMode mode);

/// Ascending k0-subset of [0, n_t).
std::vector<Index> gen_activity(Rng &rng, Index n_t, Index k0);

inline constexpr double kNoiseless = std::numeric_limits<double>::infinity();

double noise_variance(double snr_db, double power_ref);
/// Adds CN(0, sigma^2) per entry, sigma^2 = power_ref / 10^(snr_db / 10).
/// snr_db = +inf leaves the signal unchanged and draws nothing.
CVec awgn(Rng &rng, const CVec &signal, double snr_db, double power_ref);
CMat awgn(Rng &rng, const CMat &signal, double snr_db, double power_ref);

using Bits = std::vector<std::uint8_t>;

Bits random_bits(Rng &rng, Index count);
CVec bpsk(const Bits &bits);
/// Bit 1 where the real part is negative.
Bits bpsk_demap(const CVec &symbols);

enum class PerturbMode { phase, rank_one };

/// phase: entrywise e^{i theta}, theta ~ U[-magnitude pi, magnitude pi].
/// rank_one: adds s u v^H with unit u, v and |s|^2 = magnitude ||Y||_F^2.
CMat perturb(const CMat &Y, PerturbMode mode, Rng &rng, double magnitude);
CVec perturb(const CVec &y, PerturbMode mode, Rng &rng, double magnitude);

} // namespace sparse5g::airmodel
