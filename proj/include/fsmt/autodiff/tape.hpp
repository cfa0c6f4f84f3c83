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

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "fsmt/common/error.hpp"
#include "fsmt/common/matrix.hpp"
#include "fsmt/common/rng.hpp"

namespace fsmt {

// Reverse-mode tape over dense matrices. One tape per forward pass; build the
// graph with the factory methods, call backward(loss) once, then read leaf
// gradients with grad(). Leaves copy their source matrix, so the tape stays
// valid even if parameters are updated before backward() runs.
template <typename T>
class Tape {
public:
    using Id = int;

    Id leaf(const Matrix<T>& v, bool requires_grad) {
        Node n;
        n.op = Op::Leaf;
        n.val = v;
        n.needs_grad = requires_grad;
        return push(std::move(n));
    }

    Id constant(Matrix<T> v) {
        Node n;
        n.op = Op::Leaf;
        n.val = std::move(v);
        n.needs_grad = false;
        return push(std::move(n));
    }

    // C = A * B
    Id matmul(Id a, Id b) {
        const auto& A = val(a);
        const auto& B = val(b);
        require(A.cols() == B.rows(), "matmul: inner dims differ");
        Node n = binary(Op::MatMul, a, b);
        n.val = mm_nn(A, B);
        return push(std::move(n));
    }

    // C = A * B^T
    Id matmul_nt(Id a, Id b) {
        const auto& A = val(a);
        const auto& B = val(b);
        require(A.cols() == B.cols(), "matmul_nt: inner dims differ");
        Node n = binary(Op::MatMulNT, a, b);
        n.val = mm_nt(A, B);
        return push(std::move(n));
    }

    Id add(Id a, Id b) {
        const auto& A = val(a);
        const auto& B = val(b);
        require(A.same_shape(B), "add: shape mismatch");
        Node n = binary(Op::Add, a, b);
        n.val = A;
        for (std::size_t i = 0; i < n.val.size(); ++i) n.val.at_flat(i) += B.at_flat(i);
        return push(std::move(n));
    }

    Id mul(Id a, Id b) {
        const auto& A = val(a);
        const auto& B = val(b);
        require(A.same_shape(B), "mul: shape mismatch");
        Node n = binary(Op::Mul, a, b);
        n.val = A;
        for (std::size_t i = 0; i < n.val.size(); ++i) n.val.at_flat(i) *= B.at_flat(i);
        return push(std::move(n));
    }

    // C = A + 1v  (row vector v broadcast over the rows of A)
    Id add_rowvec(Id a, Id v) {
        const auto& A = val(a);
        const auto& V = val(v);
        require(V.rows() == 1 && V.cols() == A.cols(), "add_rowvec: bad vector shape");
        Node n = binary(Op::AddRowVec, a, v);
        n.val = A;
        for (int r = 0; r < A.rows(); ++r) {
            T* __restrict__ row = n.val.row(r);
            const T* __restrict__ vr = V.row(0);
            for (int c = 0; c < A.cols(); ++c) row[c] += vr[c];
        }
        return push(std::move(n));
    }

    Id scale(Id a, T s) {
        const auto& A = val(a);
        Node n = unary(Op::Scale, a);
        n.scalar = s;
        n.val = A;
        for (std::size_t i = 0; i < n.val.size(); ++i) n.val.at_flat(i) *= s;
        return push(std::move(n));
    }

    Id relu(Id a) {
        const auto& A = val(a);
        Node n = unary(Op::Relu, a);
        n.val = A;
        for (std::size_t i = 0; i < n.val.size(); ++i)
            if (n.val.at_flat(i) < T(0)) n.val.at_flat(i) = T(0);
        return push(std::move(n));
    }

    // Per-row normalization with learned gain and bias (both 1 x cols).
    Id layer_norm(Id x, Id gain, Id bias, T eps) {
        const auto& X = val(x);
        const auto& G = val(gain);
        const auto& B = val(bias);
        require(G.rows() == 1 && G.cols() == X.cols(), "layer_norm: bad gain shape");
        require(B.rows() == 1 && B.cols() == X.cols(), "layer_norm: bad bias shape");
        Node n;
        n.op = Op::LayerNorm;
        n.in = {x, gain, bias};
        n.needs_grad = nodes_[x].needs_grad || nodes_[gain].needs_grad || nodes_[bias].needs_grad;
        n.scalar = eps;
        n.val = Matrix<T>(X.rows(), X.cols());
        n.aux = Matrix<T>(X.rows(), 2);  // (mean, inv_std) per row
        for (int r = 0; r < X.rows(); ++r) {
            layer_norm_row(X.row(r), G.row(0), B.row(0), eps, X.cols(), n.val.row(r),
                           &n.aux(r, 0), &n.aux(r, 1));
        }
        return push(std::move(n));
    }

    // Row softmax. causal restricts row i to columns [0, i].
    Id softmax_rows(Id a, bool causal) {
        const auto& A = val(a);
        Node n = unary(Op::SoftmaxRows, a);
        n.flag = causal;
        n.val = Matrix<T>(A.rows(), A.cols());
        for (int r = 0; r < A.rows(); ++r)
            softmax_row(A.row(r), n.val.row(r), A.cols(), causal ? r + 1 : -1);
        return push(std::move(n));
    }

    // Inverted dropout: kept entries are scaled by 1/(1-rate). The sampled
    // mask is stored so backward sees the same pattern.
    Id dropout(Id a, T rate, Rng& rng) {
        require(rate >= T(0) && rate < T(1), "dropout: rate out of range");
        const auto& A = val(a);
        Node n = unary(Op::Dropout, a);
        n.val = Matrix<T>(A.rows(), A.cols());
        n.aux = Matrix<T>(A.rows(), A.cols());
        const T keep_scale = T(1) / (T(1) - rate);
        for (std::size_t i = 0; i < A.size(); ++i) {
            const T m = rng.real01() < static_cast<double>(rate) ? T(0) : keep_scale;
            n.aux.at_flat(i) = m;
            n.val.at_flat(i) = A.at_flat(i) * m;
        }
        return push(std::move(n));
    }

    // Row lookup: out.row(r) = table.row(ids[r]).
    Id gather_rows(Id table, const std::vector<int>& ids) {
        const auto& Tm = val(table);
        for (int id : ids)
            require(id >= 0 && id < Tm.rows(), "gather_rows: id out of range");
        Node n = unary(Op::GatherRows, table);
        n.ids = ids;
        n.val = Matrix<T>(static_cast<int>(ids.size()), Tm.cols());
        for (int r = 0; r < n.val.rows(); ++r) {
            const T* src = Tm.row(ids[r]);
            T* dst = n.val.row(r);
            for (int c = 0; c < Tm.cols(); ++c) dst[c] = src[c];
        }
        return push(std::move(n));
    }

    Id slice_cols(Id a, int lo, int hi) {
        const auto& A = val(a);
        require(0 <= lo && lo < hi && hi <= A.cols(), "slice_cols: bad range");
        Node n = unary(Op::SliceCols, a);
        n.lo = lo;
        n.hi = hi;
        n.val = Matrix<T>(A.rows(), hi - lo);
        for (int r = 0; r < A.rows(); ++r) {
            const T* src = A.row(r) + lo;
            T* dst = n.val.row(r);
            for (int c = 0; c < hi - lo; ++c) dst[c] = src[c];
        }
        return push(std::move(n));
    }

    Id concat_cols(const std::vector<Id>& parts) {
        require(!parts.empty(), "concat_cols: no inputs");
        const int rows = val(parts[0]).rows();
        int cols = 0;
        for (Id p : parts) {
            require(val(p).rows() == rows, "concat_cols: row mismatch");
            cols += val(p).cols();
        }
        Node n;
        n.op = Op::ConcatCols;
        n.in = parts;
        for (Id p : parts) n.needs_grad = n.needs_grad || nodes_[p].needs_grad;
        n.val = Matrix<T>(rows, cols);
        int off = 0;
        for (Id p : parts) {
            const auto& P = val(p);
            for (int r = 0; r < rows; ++r) {
                const T* src = P.row(r);
                T* dst = n.val.row(r) + off;
                for (int c = 0; c < P.cols(); ++c) dst[c] = src[c];
            }
            off += P.cols();
        }
        return push(std::move(n));
    }

    // Sum over rows of -log softmax(logits)[target]. Value is 1x1. Fused and
    // numerically stable; keeps the probabilities for the backward pass.
    Id cross_entropy_sum(Id logits, const std::vector<int>& targets) {
        const auto& L = val(logits);
        require(static_cast<int>(targets.size()) == L.rows(),
                "cross_entropy_sum: target count != rows");
        for (int t : targets)
            require(t >= 0 && t < L.cols(), "cross_entropy_sum: target out of range");
        Node n = unary(Op::CrossEntropySum, logits);
        n.ids = targets;
        n.aux = Matrix<T>(L.rows(), L.cols());
        T total = T(0);
        for (int r = 0; r < L.rows(); ++r) {
            const T* x = L.row(r);
            T* p = n.aux.row(r);
            T mx = x[0];
            for (int c = 1; c < L.cols(); ++c) mx = std::max(mx, x[c]);
            T sum = T(0);
            for (int c = 0; c < L.cols(); ++c) {
                p[c] = std::exp(x[c] - mx);
                sum += p[c];
            }
            const T inv = T(1) / sum;
            for (int c = 0; c < L.cols(); ++c) p[c] *= inv;
            total += std::log(sum) + mx - x[targets[r]];
        }
        n.val = Matrix<T>::scalar(total);
        return push(std::move(n));
    }

    // 1x1 sum of all entries.
    Id sum(Id a) {
        const auto& A = val(a);
        Node n = unary(Op::Sum, a);
        T total = T(0);
        for (std::size_t i = 0; i < A.size(); ++i) total += A.at_flat(i);
        n.val = Matrix<T>::scalar(total);
        return push(std::move(n));
    }

    Id add_n(const std::vector<Id>& terms) {
        require(!terms.empty(), "add_n: no inputs");
        Node n;
        n.op = Op::AddN;
        n.in = terms;
        n.val = val(terms[0]);
        for (Id t : terms) {
            n.needs_grad = n.needs_grad || nodes_[t].needs_grad;
            require(val(t).same_shape(n.val), "add_n: shape mismatch");
        }
        for (std::size_t k = 1; k < terms.size(); ++k) {
            const auto& V = val(terms[k]);
            for (std::size_t i = 0; i < n.val.size(); ++i) n.val.at_flat(i) += V.at_flat(i);
        }
        return push(std::move(n));
    }

    const Matrix<T>& value(Id id) const { return nodes_[id].val; }

    // Valid after backward(); zero matrix when the node was not reached.
    const Matrix<T>& grad(Id id) const { return nodes_[id].grad; }

    std::size_t size() const { return nodes_.size(); }

    // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse creation
    // order. loss must be a 1x1 node. Call at most once per tape.
    void backward(Id loss) {
        require(!ran_backward_, "backward: already ran");
        ran_backward_ = true;
        require(val(loss).rows() == 1 && val(loss).cols() == 1, "backward: loss not scalar");
        require(nodes_[loss].needs_grad, "backward: loss does not depend on any parameter");
        nodes_[loss].grad(0, 0) = T(1);
        for (Id i = loss; i >= 0; --i) {
            Node& n = nodes_[i];
            if (!n.needs_grad || n.grad.empty()) continue;
            backward_node(n);
        }
    }

private:
    enum class Op {
        Leaf,
        MatMul,
        MatMulNT,
        Add,
        Mul,
        AddRowVec,
        Sum,
        Scale,
        Relu,
        LayerNorm,
        SoftmaxRows,
        Dropout,
        GatherRows,
        SliceCols,
        ConcatCols,
        CrossEntropySum,
        AddN,
    };

    struct Node {
        Op op = Op::Leaf;
        std::vector<Id> in;
        Matrix<T> val;
        Matrix<T> grad;  // empty until someone accumulates into it
        bool needs_grad = false;
        T scalar = T(0);        // Scale factor / LayerNorm eps
        bool flag = false;      // SoftmaxRows causal
        int lo = 0, hi = 0;     // SliceCols range
        std::vector<int> ids;   // GatherRows ids / CrossEntropySum targets
        Matrix<T> aux;          // op-specific saved state
    };

    static void require(bool ok, const char* msg) {
        if (!ok) throw ShapeError(msg);
    }

    Node unary(Op op, Id a) {
        Node n;
        n.op = op;
        n.in = {a};
        n.needs_grad = nodes_[a].needs_grad;
        return n;
    }

    Node binary(Op op, Id a, Id b) {
        Node n;
        n.op = op;
        n.in = {a, b};
        n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
        return n;
    }

    Id push(Node n) {
        if (n.needs_grad) n.grad = Matrix<T>(n.val.rows(), n.val.cols());
        nodes_.push_back(std::move(n));
        return static_cast<Id>(nodes_.size()) - 1;
    }

    const Matrix<T>& val(Id id) const { return nodes_[id].val; }

    Matrix<T>* sink(Id id) {
        Node& n = nodes_[id];
        if (!n.needs_grad) return nullptr;
        return &n.grad;
    }

    void backward_node(Node& n) {
        const Matrix<T>& g = n.grad;
        switch (n.op) {
            case Op::Leaf:
                break;
            case Op::MatMul: {  // C = A B: dA += g B^T, dB += A^T g
                if (auto* da = sink(n.in[0])) mm_nt_acc(g, val(n.in[1]), *da);
                if (auto* db = sink(n.in[1])) mm_tn_acc(val(n.in[0]), g, *db);
                break;
            }
            case Op::MatMulNT: {  // C = A B^T: dA += g B, dB += g^T A
                if (auto* da = sink(n.in[0])) mm_nn_acc(g, val(n.in[1]), *da);
                if (auto* db = sink(n.in[1])) mm_tn_acc(g, val(n.in[0]), *db);
                break;
            }
            case Op::Add: {
                for (int k = 0; k < 2; ++k)
                    if (auto* d = sink(n.in[k]))
                        for (std::size_t i = 0; i < g.size(); ++i)
                            d->at_flat(i) += g.at_flat(i);
                break;
            }
            case Op::Mul: {
                const auto& A = val(n.in[0]);
                const auto& B = val(n.in[1]);
                if (auto* da = sink(n.in[0]))
                    for (std::size_t i = 0; i < g.size(); ++i)
                        da->at_flat(i) += g.at_flat(i) * B.at_flat(i);
                if (auto* db = sink(n.in[1]))
                    for (std::size_t i = 0; i < g.size(); ++i)
                        db->at_flat(i) += g.at_flat(i) * A.at_flat(i);
                break;
            }
            case Op::Sum: {
                if (auto* da = sink(n.in[0])) {
                    const T gs = g(0, 0);
                    for (std::size_t i = 0; i < da->size(); ++i) da->at_flat(i) += gs;
                }
                break;
            }
            case Op::AddRowVec: {
                if (auto* da = sink(n.in[0]))
                    for (std::size_t i = 0; i < g.size(); ++i) da->at_flat(i) += g.at_flat(i);
                if (auto* dv = sink(n.in[1])) {
                    for (int r = 0; r < g.rows(); ++r) {
                        const T* gr = g.row(r);
                        T* out = dv->row(0);
                        for (int c = 0; c < g.cols(); ++c) out[c] += gr[c];
                    }
                }
                break;
            }
            case Op::Scale: {
                if (auto* da = sink(n.in[0]))
                    for (std::size_t i = 0; i < g.size(); ++i)
                        da->at_flat(i) += n.scalar * g.at_flat(i);
                break;
            }
            case Op::Relu: {
                if (auto* da = sink(n.in[0])) {
                    const auto& X = val(n.in[0]);
                    for (std::size_t i = 0; i < g.size(); ++i)
                        if (X.at_flat(i) > T(0)) da->at_flat(i) += g.at_flat(i);
                }
                break;
            }
            case Op::LayerNorm:
                backward_layer_norm(n);
                break;
            case Op::SoftmaxRows: {
                if (auto* da = sink(n.in[0])) {
                    const auto& Y = n.val;
                    for (int r = 0; r < Y.rows(); ++r) {
                        const T* y = Y.row(r);
                        const T* gr = g.row(r);
                        T dot = T(0);
                        for (int c = 0; c < Y.cols(); ++c) dot += gr[c] * y[c];
                        T* out = da->row(r);
                        for (int c = 0; c < Y.cols(); ++c) out[c] += y[c] * (gr[c] - dot);
                    }
                }
                break;
            }
            case Op::Dropout: {
                if (auto* da = sink(n.in[0]))
                    for (std::size_t i = 0; i < g.size(); ++i)
                        da->at_flat(i) += g.at_flat(i) * n.aux.at_flat(i);
                break;
            }
            case Op::GatherRows: {
                if (auto* dt = sink(n.in[0])) {
                    for (int r = 0; r < g.rows(); ++r) {
                        const T* gr = g.row(r);
                        T* out = dt->row(n.ids[r]);
                        for (int c = 0; c < g.cols(); ++c) out[c] += gr[c];
                    }
                }
                break;
            }
            case Op::SliceCols: {
                if (auto* da = sink(n.in[0])) {
                    for (int r = 0; r < g.rows(); ++r) {
                        const T* gr = g.row(r);
                        T* out = da->row(r) + n.lo;
                        for (int c = 0; c < g.cols(); ++c) out[c] += gr[c];
                    }
                }
                break;
            }
            case Op::ConcatCols: {
                int off = 0;
                for (Id p : n.in) {
                    const int w = val(p).cols();
                    if (auto* dp = sink(p)) {
                        for (int r = 0; r < g.rows(); ++r) {
                            const T* gr = g.row(r) + off;
                            T* out = dp->row(r);
                            for (int c = 0; c < w; ++c) out[c] += gr[c];
                        }
                    }
                    off += w;
                }
                break;
            }
            case Op::CrossEntropySum: {
                if (auto* dl = sink(n.in[0])) {
                    const T gs = g(0, 0);
                    for (int r = 0; r < n.aux.rows(); ++r) {
                        const T* p = n.aux.row(r);
                        T* out = dl->row(r);
                        for (int c = 0; c < n.aux.cols(); ++c) out[c] += gs * p[c];
                        out[n.ids[r]] -= gs;
                    }
                }
                break;
            }
            case Op::AddN: {
                for (Id t : n.in)
                    if (auto* d = sink(t))
                        for (std::size_t i = 0; i < g.size(); ++i)
                            d->at_flat(i) += g.at_flat(i);
                break;
            }
        }
    }

    // dx = s*(dxhat - mean(dxhat) - xhat*mean(dxhat .* xhat)), dxhat = dy*g
    void backward_layer_norm(Node& n) {
        const auto& X = val(n.in[0]);
        const auto& G = val(n.in[1]);
        const auto& dy = n.grad;
        const int cols = X.cols();
        auto* dx = sink(n.in[0]);
        auto* dg = sink(n.in[1]);
        auto* db = sink(n.in[2]);
        std::vector<T> xhat(cols), dxh(cols);
        for (int r = 0; r < X.rows(); ++r) {
            const T mean = n.aux(r, 0);
            const T inv_std = n.aux(r, 1);
            const T* x = X.row(r);
            const T* gr = dy.row(r);
            for (int c = 0; c < cols; ++c) xhat[c] = (x[c] - mean) * inv_std;
            if (dg) {
                T* out = dg->row(0);
                for (int c = 0; c < cols; ++c) out[c] += gr[c] * xhat[c];
            }
            if (db) {
                T* out = db->row(0);
                for (int c = 0; c < cols; ++c) out[c] += gr[c];
            }
            if (dx) {
                T m1 = T(0), m2 = T(0);
                for (int c = 0; c < cols; ++c) {
                    dxh[c] = gr[c] * G(0, c);
                    m1 += dxh[c];
                    m2 += dxh[c] * xhat[c];
                }
                m1 /= T(cols);
                m2 /= T(cols);
                T* out = dx->row(r);
                for (int c = 0; c < cols; ++c)
                    out[c] += inv_std * (dxh[c] - m1 - xhat[c] * m2);
            }
        }
    }

    std::vector<Node> nodes_;
    bool ran_backward_ = false;
};

}  // namespace fsmt
