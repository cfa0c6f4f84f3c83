/*
 * Copyright 2026 The fsmt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "fsmt/common/error.hpp"

namespace fsmt {

// Dense row-major matrix. Vectors are 1xN or Nx1 matrices; scalars are 1x1.
template <typename T>
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, T fill = T(0))
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

    static Matrix scalar(T v) {
        Matrix m(1, 1);
        m.data_[0] = v;
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    T operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    T& at_flat(std::size_t i) { return data_[i]; }
    T at_flat(std::size_t i) const { return data_[i]; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    T* row(int r) { return data_.data() + static_cast<std::size_t>(r) * cols_; }
    const T* row(int r) const { return data_.data() + static_cast<std::size_t>(r) * cols_; }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
    void zero() { fill(T(0)); }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    bool all_finite() const {
        for (T v : data_) {
            if (!std::isfinite(static_cast<double>(v))) return false;
        }
        return true;
    }

    bool bits_equal(const Matrix& o) const {
        return same_shape(o) && data_ == o.data_;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<T> data_;
};

namespace detail {

inline void require(bool ok, const char* msg) {
    if (!ok) throw ShapeError(msg);
}

}  // namespace detail

// C += A * B            A: MxK, B: KxN, C: MxN
template <typename T>
void mm_nn_acc(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c) {
    detail::require(a.cols() == b.rows() && a.rows() == c.rows() && b.cols() == c.cols(),
                    "mm_nn_acc: shape mismatch");
    const int m = a.rows(), k = a.cols(), n = b.cols();
    for (int i = 0; i < m; ++i) {
        const T* __restrict__ arow = a.row(i);
        T* __restrict__ crow = c.row(i);
        for (int p = 0; p < k; ++p) {
            const T av = arow[p];
            const T* __restrict__ brow = b.row(p);
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C += A * B^T          A: MxK, B: NxK, C: MxN
template <typename T>
void mm_nt_acc(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c) {
    detail::require(a.cols() == b.cols() && a.rows() == c.rows() && b.rows() == c.cols(),
                    "mm_nt_acc: shape mismatch");
    const int m = a.rows(), k = a.cols(), n = b.rows();
    for (int i = 0; i < m; ++i) {
        const T* __restrict__ arow = a.row(i);
        T* __restrict__ crow = c.row(i);
        for (int j = 0; j < n; ++j) {
            const T* __restrict__ brow = b.row(j);
            T acc = T(0);
            for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] += acc;
        }
    }
}

// C += A^T * B          A: KxM, B: KxN, C: MxN
template <typename T>
void mm_tn_acc(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c) {
    detail::require(a.rows() == b.rows() && a.cols() == c.rows() && b.cols() == c.cols(),
                    "mm_tn_acc: shape mismatch");
    const int k = a.rows(), m = a.cols(), n = b.cols();
    for (int p = 0; p < k; ++p) {
        const T* __restrict__ arow = a.row(p);
        const T* __restrict__ brow = b.row(p);
        for (int i = 0; i < m; ++i) {
            const T av = arow[i];
            T* __restrict__ crow = c.row(i);
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

template <typename T>
Matrix<T> mm_nn(const Matrix<T>& a, const Matrix<T>& b) {
    Matrix<T> c(a.rows(), b.cols());
    mm_nn_acc(a, b, c);
    return c;
}

template <typename T>
Matrix<T> mm_nt(const Matrix<T>& a, const Matrix<T>& b) {
    Matrix<T> c(a.rows(), b.rows());
    mm_nt_acc(a, b, c);
    return c;
}

template <typename T>
Matrix<T> mm_tn(const Matrix<T>& a, const Matrix<T>& b) {
    Matrix<T> c(a.cols(), b.cols());
    mm_tn_acc(a, b, c);
    return c;
}

// Row-wise softmax over columns [0, limit); entries at and beyond `limit`
// are treated as masked (probability zero). limit < 0 means no mask.
template <typename T>
void softmax_row(const T* in, T* out, int cols, int limit) {
    const int n = (limit < 0) ? cols : std::min(limit, cols);
    T mx = -std::numeric_limits<T>::infinity();
    for (int j = 0; j < n; ++j) mx = std::max(mx, in[j]);
    T sum = T(0);
    for (int j = 0; j < n; ++j) {
        out[j] = std::exp(in[j] - mx);
        sum += out[j];
    }
    const T inv = T(1) / sum;
    for (int j = 0; j < n; ++j) out[j] *= inv;
    for (int j = n; j < cols; ++j) out[j] = T(0);
}

// y = (x - mean) / sqrt(var + eps) * gain + bias, applied per row.
// Returns nothing; the caller keeps what it needs for the backward pass.
template <typename T>
void layer_norm_row(const T* x, const T* gain, const T* bias, T eps, int cols, T* y,
                    T* out_mean = nullptr, T* out_inv_std = nullptr) {
    T mean = T(0);
    for (int j = 0; j < cols; ++j) mean += x[j];
    mean /= T(cols);
    T var = T(0);
    for (int j = 0; j < cols; ++j) {
        const T d = x[j] - mean;
        var += d * d;
    }
    var /= T(cols);
    const T inv_std = T(1) / std::sqrt(var + eps);
    for (int j = 0; j < cols; ++j) y[j] = (x[j] - mean) * inv_std * gain[j] + bias[j];
    if (out_mean) *out_mean = mean;
    if (out_inv_std) *out_inv_std = inv_std;
}

template <typename T>
T max_abs_diff(const Matrix<T>& a, const Matrix<T>& b) {
    detail::require(a.same_shape(b), "max_abs_diff: shape mismatch");
    T m = T(0);
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.at_flat(i) - b.at_flat(i)));
    return m;
}

}  // namespace fsmt
