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

#include "sparse5g/fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <utility>

namespace sparse5g::fft {
namespace {

struct Plan {
    fftw_plan handle = nullptr;
    ~Plan() {
        if (handle)
            fftw_destroy_plan(handle);
    }
};

std::mutex plan_mutex;
std::map<std::pair<Index, int>, std::shared_ptr<Plan>> plan_cache;

std::shared_ptr<Plan> get_plan(Index n, int sign) {
    std::lock_guard lock(plan_mutex);
    auto &slot = plan_cache[{n, sign}];
    if (!slot) {
        CVec in(n), out(n);
        slot = std::make_shared<Plan>();
        slot->handle = fftw_plan_dft_1d(
            static_cast<int>(n), reinterpret_cast<fftw_complex *>(in.data()),
            reinterpret_cast<fftw_complex *>(out.data()), sign,
            FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    return slot;
}

CVec execute(const CVec &x, int sign) {
    const Index n = x.size();
    CVec out(n);
    if (n == 0)
        return out;
    auto plan = get_plan(n, sign);
    // fftw_execute_dft never writes to its input for out-of-place plans.
    fftw_execute_dft(plan->handle,
                     reinterpret_cast<fftw_complex *>(const_cast<cplx *>(x.data())),
                     reinterpret_cast<fftw_complex *>(out.data()));
    return out;
}

} // namespace

CVec dft(const CVec &x) { return execute(x, FFTW_FORWARD); }

CVec idft(const CVec &X) {
    CVec out = execute(X, FFTW_BACKWARD);
    if (X.size() > 0)
        out /= static_cast<double>(X.size());
    return out;
}

CVec unitary_dft(const CVec &x) {
    CVec out = execute(x, FFTW_FORWARD);
    if (x.size() > 0)
        out /= std::sqrt(static_cast<double>(x.size()));
    return out;
}

CVec unitary_idft(const CVec &X) {
    CVec out = execute(X, FFTW_BACKWARD);
    if (X.size() > 0)
        out /= std::sqrt(static_cast<double>(X.size()));
    return out;
}

} // namespace sparse5g::fft
