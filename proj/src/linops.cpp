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

#include "sparse5g/linops.hpp"

#include "sparse5g/fft.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace sparse5g::linops {

namespace {

void require_length(const CVec &v, Index expected, const char *what, const std::string &op) {
    if (v.size() != expected)
        throw std::invalid_argument(op + ": " + what + " has length " + std::to_string(v.size()) +
                                    ", expected " + std::to_string(expected));
}

} // namespace

CVec LinearMap::apply(const CVec &x) const {
    require_length(x, cols(), "forward input", name());
    return forward(x);
}

CVec LinearMap::apply_adjoint(const CVec &y) const {
    require_length(y, rows(), "adjoint input", name());
    return adjoint(y);
}

CVec LinearMap::column(Index j) const {
    CVec e = CVec::Zero(cols());
    e(j) = 1.0;
    return forward(e);
}

// --- DenseMap --------------------------------------------------------------

DenseMap::DenseMap(CMat matrix) : matrix_(std::move(matrix)) {}

// --- SubsampledDft ---------------------------------------------------------

SubsampledDft::SubsampledDft(Index n, std::vector<Index> window)
    : n_(n), window_(std::move(window)) {
    if (n <= 0)
        throw std::invalid_argument("SubsampledDft: n must be positive");
    if (static_cast<Index>(window_.size()) > n)
        throw std::invalid_argument("SubsampledDft: window larger than n");
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (Index idx : window_) {
        if (idx < 0 || idx >= n)
            throw std::invalid_argument("SubsampledDft: window index " + std::to_string(idx) +
                                        " outside [0, " + std::to_string(n) + ")");
        if (seen[static_cast<std::size_t>(idx)])
            throw std::invalid_argument("SubsampledDft: duplicate window index " +
                                        std::to_string(idx));
        seen[static_cast<std::size_t>(idx)] = true;
    }
}

CVec SubsampledDft::forward(const CVec &x) const {
    const CVec full = fft::unitary_dft(x);
    CVec out(rows());
    for (std::size_t i = 0; i < window_.size(); ++i)
        out(static_cast<Index>(i)) = full(window_[i]);
    return out;
}

CVec SubsampledDft::adjoint(const CVec &y) const {
    CVec full = CVec::Zero(n_);
    for (std::size_t i = 0; i < window_.size(); ++i)
        full(window_[i]) = y(static_cast<Index>(i));
    return fft::unitary_idft(full);
}

CVec SubsampledDft::column(Index j) const {
    CVec out(rows());
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_));
    for (std::size_t i = 0; i < window_.size(); ++i) {
        // Reduce the phase index modulo n before scaling to keep it exact.
        const Index k = (window_[i] * j) % n_;
        const double phase = -2.0 * kPi * static_cast<double>(k) / static_cast<double>(n_);
        out(static_cast<Index>(i)) = scale * cplx(std::cos(phase), std::sin(phase));
    }
    return out;
}

// --- Circulant -------------------------------------------------------------

Circulant::Circulant(CVec first_column) : n_(first_column.size()) {
    if (n_ == 0)
        throw std::invalid_argument("Circulant: empty generator");
    spectrum_ = fft::dft(first_column);
}

CVec Circulant::forward(const CVec &x) const {
    return fft::idft(spectrum_.cwiseProduct(fft::dft(x)));
}

CVec Circulant::adjoint(const CVec &y) const {
    return fft::idft(spectrum_.conjugate().cwiseProduct(fft::dft(y)));
}

// --- LiftedConvMap ---------------------------------------------------------

CVec LiftedConvMap::forward(const CVec &x) const {
    CVec out = CVec::Zero(n_);
    for (Index k = 0; k < n_; ++k)
        for (Index j = 0; j < n_; ++j)
            out((j + k) % n_) += x(j + k * n_);
    return out;
}

CVec LiftedConvMap::adjoint(const CVec &y) const {
    CVec out(n_ * n_);
    for (Index k = 0; k < n_; ++k)
        for (Index j = 0; j < n_; ++j)
            out(j + k * n_) = y((j + k) % n_);
    return out;
}

CVec LiftedConvMap::column(Index idx) const {
    CVec out = CVec::Zero(n_);
    const Index j = idx % n_;
    const Index k = idx / n_;
    out((j + k) % n_) = 1.0;
    return out;
}

// --- SubspaceLift ----------------------------------------------------------

SubspaceLift::SubspaceLift(Index n, Index len, CMat code)
    : n_(n), len_(len), code_(std::move(code)) {
    if (len_ <= 0 || len_ > n_)
        throw std::invalid_argument("SubspaceLift: length must lie in [1, n]");
    if (code_.rows() != n_)
        throw std::invalid_argument("SubspaceLift: code matrix must have n rows");
}

CVec SubspaceLift::forward(const CVec &x) const {
    const Eigen::Map<const CMat> Z(x.data(), len_, code_.cols());
    CMat full = CMat::Zero(n_, n_);
    full.topRows(len_) = Z * code_.transpose();
    return Eigen::Map<const CVec>(full.data(), full.size());
}

CVec SubspaceLift::adjoint(const CVec &y) const {
    const Eigen::Map<const CMat> W(y.data(), n_, n_);
    const CMat Z = W.topRows(len_) * code_.conjugate();
    return Eigen::Map<const CVec>(Z.data(), Z.size());
}

// --- ComposedMap -----------------------------------------------------------

ComposedMap::ComposedMap(MapPtr outer, MapPtr inner)
    : outer_(std::move(outer)), inner_(std::move(inner)) {
    if (!outer_ || !inner_)
        throw std::invalid_argument("ComposedMap: null operand");
    if (outer_->cols() != inner_->rows())
        throw std::invalid_argument("ComposedMap: dimension mismatch (" +
                                    std::to_string(outer_->cols()) + " vs " +
                                    std::to_string(inner_->rows()) + ")");
}

std::string ComposedMap::name() const { return outer_->name() + "*" + inner_->name(); }

// --- HStackMap -------------------------------------------------------------

HStackMap::HStackMap(std::vector<MapPtr> blocks) : blocks_(std::move(blocks)) {
    if (blocks_.empty())
        throw std::invalid_argument("HStackMap: no blocks");
    rows_ = blocks_.front()->rows();
    offsets_.push_back(0);
    for (const auto &b : blocks_) {
        if (b->rows() != rows_)
            throw std::invalid_argument("HStackMap: blocks disagree on row count");
        offsets_.push_back(offsets_.back() + b->cols());
    }
}

Index HStackMap::block_cols(Index p) const {
    return blocks_[static_cast<std::size_t>(p)]->cols();
}

CVec HStackMap::forward(const CVec &x) const {
    CVec out = CVec::Zero(rows_);
    for (std::size_t p = 0; p < blocks_.size(); ++p)
        out += blocks_[p]->apply(x.segment(offsets_[p], blocks_[p]->cols()));
    return out;
}

CVec HStackMap::adjoint(const CVec &y) const {
    CVec out(cols());
    for (std::size_t p = 0; p < blocks_.size(); ++p)
        out.segment(offsets_[p], blocks_[p]->cols()) = blocks_[p]->apply_adjoint(y);
    return out;
}

CVec HStackMap::column(Index j) const {
    const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), j);
    const auto p = static_cast<std::size_t>(std::distance(offsets_.begin(), it) - 1);
    return blocks_[p]->column(j - offsets_[p]);
}

// --- ColumnwiseMap ---------------------------------------------------------

ColumnwiseMap::ColumnwiseMap(std::vector<MapPtr> blocks) : blocks_(std::move(blocks)) {
    if (blocks_.empty())
        throw std::invalid_argument("ColumnwiseMap: no blocks");
    in_offsets_.push_back(0);
    out_offsets_.push_back(0);
    for (const auto &b : blocks_) {
        if (b->cols() != blocks_.front()->cols())
            throw std::invalid_argument("ColumnwiseMap: blocks must share the input length");
        in_offsets_.push_back(in_offsets_.back() + b->cols());
        out_offsets_.push_back(out_offsets_.back() + b->rows());
    }
}

ColumnwiseMap::ColumnwiseMap(MapPtr block, Index columns)
    : ColumnwiseMap(std::vector<MapPtr>(static_cast<std::size_t>(columns), block)) {}

MatrixShape ColumnwiseMap::input_shape() const {
    return {blocks_.front()->cols(), static_cast<Index>(blocks_.size())};
}

CVec ColumnwiseMap::forward(const CVec &x) const {
    CVec out(rows());
    for (std::size_t j = 0; j < blocks_.size(); ++j)
        out.segment(out_offsets_[j], blocks_[j]->rows()) =
            blocks_[j]->apply(x.segment(in_offsets_[j], blocks_[j]->cols()));
    return out;
}

CVec ColumnwiseMap::adjoint(const CVec &y) const {
    CVec out(cols());
    for (std::size_t j = 0; j < blocks_.size(); ++j)
        out.segment(in_offsets_[j], blocks_[j]->cols()) =
            blocks_[j]->apply_adjoint(y.segment(out_offsets_[j], blocks_[j]->rows()));
    return out;
}

// --- operations ------------------------------------------------------------

std::shared_ptr<const SubsampledDft> subsampled_dft(Index n, std::vector<Index> window) {
    return std::make_shared<const SubsampledDft>(n, std::move(window));
}

CVec circulant_apply(const CVec &s, const CVec &v, ApplyMode mode) {
    if (s.size() != v.size())
        throw std::invalid_argument("circulant_apply: length mismatch (" +
                                    std::to_string(s.size()) + " vs " +
                                    std::to_string(v.size()) + ")");
    const Circulant C(s);
    return mode == ApplyMode::forward ? C.apply(v) : C.apply_adjoint(v);
}

CVec lifted_conv_apply(const CMat &X) {
    if (X.rows() != X.cols())
        throw std::invalid_argument("lifted_conv_apply: matrix is " + std::to_string(X.rows()) +
                                    "x" + std::to_string(X.cols()) + ", expected square");
    const LiftedConvMap B(X.rows());
    return B.apply(Eigen::Map<const CVec>(X.data(), X.size()));
}

std::vector<Index> centered_window(Index n, Index m) {
    if (m < 0 || m > n)
        throw std::invalid_argument("centered_window: need 0 <= m <= n");
    std::vector<Index> w(static_cast<std::size_t>(m));
    std::iota(w.begin(), w.end(), (n - m) / 2);
    return w;
}

std::vector<Index> comb_window(Index n, Index m, Index offset) {
    if (m < 0 || m > n)
        throw std::invalid_argument("comb_window: need 0 <= m <= n");
    std::vector<Index> w(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i)
        w[static_cast<std::size_t>(i)] = (i * n / m + offset) % n;
    return w;
}

double adjoint_mismatch(const LinearMap &A, const CVec &u, const CVec &v) {
    const cplx lhs = v.dot(A.apply(u));         // <A u, v> as v^H (A u)
    const cplx rhs = A.apply_adjoint(v).dot(u); // <u, A^H v>
    const double scale = u.norm() * v.norm();
    return scale > 0 ? std::abs(lhs - rhs) / scale : std::abs(lhs - rhs);
}

} // namespace sparse5g::linops
