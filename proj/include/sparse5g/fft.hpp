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

namespace sparse5g::fft {

// Thin FFTW wrapper. Plans are cached per length and shared between
// threads; execution uses the new-array interface and is thread-safe.

/// Unnormalized forward DFT: X_k = sum_t x_t exp(-2 pi i k t / n).
CVec dft(const CVec &x);
/// Inverse DFT including the 1/n factor, so idft(dft(x)) == x.
CVec idft(const CVec &X);
/// Unitary DFT (1/sqrt(n) on both directions).
CVec unitary_dft(const CVec &x);
CVec unitary_idft(const CVec &X);

} // namespace sparse5g::fft
