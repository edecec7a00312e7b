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

#include <memory>
#include <string>
#include <vector>

namespace sparse5g::linops {

/// Linear operator with forward and adjoint application.
///
/// Implementations are immutable after construction; forward/adjoint
/// allocate their own scratch, so one instance can be shared by any number
/// of concurrent trial workers.
class LinearMap {
public:
    virtual ~LinearMap() = default;

    virtual Index rows() const = 0;
    virtual Index cols() const = 0;

    /// Length-cols input to length-rows output.
    CVec apply(const CVec &x) const;
    /// Conjugate transpose: length-rows input to length-cols output.
    CVec apply_adjoint(const CVec &y) const;

    /// Column j of the induced matrix. Defaults to forward(e_j); structured
    /// operators override this with something cheaper.
    virtual CVec column(Index j) const;

    virtual std::string name() const = 0;

protected:
    virtual CVec forward(const CVec &x) const = 0;
    virtual CVec adjoint(const CVec &y) const = 0;
};

using MapPtr = std::shared_ptr<const LinearMap>;

// ---------------------------------------------------------------------------
// Concrete operators
// ---------------------------------------------------------------------------

class DenseMap final : public LinearMap {
public:
    explicit DenseMap(CMat matrix);
    Index rows() const override { return matrix_.rows(); }
    Index cols() const override { return matrix_.cols(); }
    CVec column(Index j) const override { return matrix_.col(j); }
    std::string name() const override { return "DenseMap"; }
    const CMat &matrix() const { return matrix_; }

protected:
    CVec forward(const CVec &x) const override { return matrix_ * x; }
    CVec adjoint(const CVec &y) const override { return matrix_.adjoint() * y; }

private:
    CMat matrix_;
};

class IdentityMap final : public LinearMap {
public:
    explicit IdentityMap(Index n) : n_(n) {}
    Index rows() const override { return n_; }
    Index cols() const override { return n_; }
    std::string name() const override { return "IdentityMap"; }

protected:
    CVec forward(const CVec &x) const override { return x; }
    CVec adjoint(const CVec &y) const override { return y; }

private:
    Index n_;
};

/// Unitary DFT of length n followed by restriction to an ordered window of
/// bins. The rows of the induced matrix are orthonormal.
class SubsampledDft final : public LinearMap {
public:
    SubsampledDft(Index n, std::vector<Index> window);
    Index rows() const override { return static_cast<Index>(window_.size()); }
    Index cols() const override { return n_; }
    CVec column(Index j) const override;
    std::string name() const override { return "SubsampledDft"; }

    Index n() const { return n_; }
    const std::vector<Index> &window() const { return window_; }

protected:
    CVec forward(const CVec &x) const override;
    CVec adjoint(const CVec &y) const override;

private:
    Index n_;
    std::vector<Index> window_;
};

/// Circular convolution with a fixed length-n sequence s, i.e. the circulant
/// matrix whose first column is s (equivalently: circ(s) acting on row
/// vectors from the right). Applied in the frequency domain.
class Circulant final : public LinearMap {
public:
    explicit Circulant(CVec first_column);
    Index rows() const override { return n_; }
    Index cols() const override { return n_; }
    std::string name() const override { return "Circulant"; }
    /// Unnormalized DFT of the generating sequence (the eigenvalues).
    const CVec &spectrum() const { return spectrum_; }

protected:
    CVec forward(const CVec &x) const override;
    CVec adjoint(const CVec &y) const override;

private:
    Index n_;
    CVec spectrum_;
};

/// X (n x n, column-major vectorized) -> sum over the anti-diagonals modulo
/// n: out_i = sum_{(j+k) mod n = i} X(j,k). For X = h x^T this is the
/// circular convolution of h and x.
class LiftedConvMap final : public LinearMap {
public:
    explicit LiftedConvMap(Index n) : n_(n) {}
    Index rows() const override { return n_; }
    Index cols() const override { return n_ * n_; }
    CVec column(Index j) const override;
    std::string name() const override { return "LiftedConvMap"; }
    MatrixShape input_shape() const { return {n_, n_}; }

protected:
    CVec forward(const CVec &x) const override;
    CVec adjoint(const CVec &y) const override;

private:
    Index n_;
};

/// Embeds a small matrix Z (len x code.cols()) as E Z C^T, where E places
/// rows into the first `len` rows of an n x n matrix and C is an n x K code
/// matrix. Composed with LiftedConvMap this gives the lifted convolution of
/// a short impulse response with coded data.
class SubspaceLift final : public LinearMap {
public:
    SubspaceLift(Index n, Index len, CMat code);
    Index rows() const override { return n_ * n_; }
    Index cols() const override { return len_ * code_.cols(); }
    std::string name() const override { return "SubspaceLift"; }
    MatrixShape input_shape() const { return {len_, code_.cols()}; }

protected:
    CVec forward(const CVec &x) const override;
    CVec adjoint(const CVec &y) const override;

private:
    Index n_;
    Index len_;
    CMat code_;
};

/// outer(inner(x)).
class ComposedMap final : public LinearMap {
public:
    ComposedMap(MapPtr outer, MapPtr inner);
    Index rows() const override { return outer_->rows(); }
    Index cols() const override { return inner_->cols(); }
    CVec column(Index j) const override { return outer_->apply(inner_->column(j)); }
    std::string name() const override;

protected:
    CVec forward(const CVec &x) const override { return outer_->apply(inner_->apply(x)); }
    CVec adjoint(const CVec &y) const override {
        return inner_->apply_adjoint(outer_->apply_adjoint(y));
    }

private:
    MapPtr outer_;
    MapPtr inner_;
};

/// Horizontal concatenation [A_1 A_2 ... A_P]: the stacked-variable form of
/// a sum of contributions sum_p A_p x_p.
class HStackMap final : public LinearMap {
public:
    explicit HStackMap(std::vector<MapPtr> blocks);
    Index rows() const override { return rows_; }
    Index cols() const override { return offsets_.back(); }
    CVec column(Index j) const override;
    std::string name() const override { return "HStackMap"; }

    Index block_count() const { return static_cast<Index>(blocks_.size()); }
    Index block_offset(Index p) const { return offsets_[static_cast<std::size_t>(p)]; }
    Index block_cols(Index p) const;

protected:
    CVec forward(const CVec &x) const override;
    CVec adjoint(const CVec &y) const override;

private:
    std::vector<MapPtr> blocks_;
    std::vector<Index> offsets_;
    Index rows_ = 0;
};

/// Block-diagonal operator acting on the columns of a matrix: column j of
/// the input (vectorized column-major) goes through blocks[j], outputs are
/// stacked. Used for per-sensor and per-antenna measurement.
class ColumnwiseMap final : public LinearMap {
public:
    explicit ColumnwiseMap(std::vector<MapPtr> blocks);
    ColumnwiseMap(MapPtr block, Index columns);
    Index rows() const override { return out_offsets_.back(); }
    Index cols() const override { return in_offsets_.back(); }
    std::string name() const override { return "ColumnwiseMap"; }
    MatrixShape input_shape() const;

protected:
    CVec forward(const CVec &x) const override;
    CVec adjoint(const CVec &y) const override;

private:
    std::vector<MapPtr> blocks_;
    std::vector<Index> in_offsets_;
    std::vector<Index> out_offsets_;
};

class ScaledMap final : public LinearMap {
public:
    ScaledMap(MapPtr inner, cplx scale) : inner_(std::move(inner)), scale_(scale) {}
    Index rows() const override { return inner_->rows(); }
    Index cols() const override { return inner_->cols(); }
    std::string name() const override { return "ScaledMap"; }

protected:
    CVec forward(const CVec &x) const override { return scale_ * inner_->apply(x); }
    CVec adjoint(const CVec &y) const override {
        return std::conj(scale_) * inner_->apply_adjoint(y);
    }

private:
    MapPtr inner_;
    cplx scale_;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

enum class ApplyMode { forward, adjoint };

/// Throws std::invalid_argument naming the offending index on duplicates or
/// out-of-range bins.
std::shared_ptr<const SubsampledDft> subsampled_dft(Index n, std::vector<Index> window);

CVec circulant_apply(const CVec &s, const CVec &v, ApplyMode mode = ApplyMode::forward);

/// X must be square; out_i = sum_{j+k = i mod n} X(j,k).
CVec lifted_conv_apply(const CMat &X);

// Window layouts for the measurement bins.
std::vector<Index> centered_window(Index n, Index m);
/// m bins spread evenly over [0, n): floor(i n / m) + offset.
std::vector<Index> comb_window(Index n, Index m, Index offset = 0);

/// |<A u, v> - <u, A^H v>| / (|u| |v|) for the given probe vectors.
double adjoint_mismatch(const LinearMap &A, const CVec &u, const CVec &v);

} // namespace sparse5g::linops
