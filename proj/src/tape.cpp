#include "imv/tape.hpp"

#include <cmath>

#include "imv/errors.hpp"

namespace imv {

Tape::Node& Tape::push(Op op, std::uint32_t a, std::uint32_t b, std::uint32_t aux0,
                       std::uint32_t aux1) {
    if (n_ == nodes_.size()) nodes_.emplace_back();
    Node& nd = nodes_[n_++];
    nd.op = op;
    nd.a = a;
    nd.b = b;
    nd.aux0 = aux0;
    nd.aux1 = aux1;
    return nd;
}

std::uint32_t Tape::store_extra(std::span<const Var> vs) {
    std::uint32_t ofs = static_cast<std::uint32_t>(extra_n_);
    if (extra_n_ + vs.size() > extra_.size()) extra_.resize(extra_n_ + vs.size());
    for (Var v : vs) extra_[extra_n_++] = v.idx;
    return ofs;
}

Var Tape::constant(const NdArray& v) {
    Node& nd = push(Op::Const);
    nd.val.reset_shape(v.shape);
    nd.val.data = v.data;
    return last();
}

Var Tape::scalar(double v) {
    Node& nd = push(Op::Const);
    nd.val.reset_shape({1});
    nd.val.data[0] = v;
    return last();
}

Var Tape::param(const NdArray& v) {
    Node& nd = push(Op::Param);
    nd.val.reset_shape(v.shape);
    nd.val.data = v.data;
    return last();
}

#define IMV_BINARY_ELEMWISE(name, OPTAG, expr)                                              \
    Var Tape::name(Var a, Var b) {                                                          \
        const NdArray& va = nodes_[a.idx].val;                                              \
        const NdArray& vb = nodes_[b.idx].val;                                              \
        if (!va.same_shape(vb))                                                             \
            throw DimensionError(#name ": shapes differ, " + shape_str(va.shape) + " vs " + \
                                 shape_str(vb.shape));                                      \
        Node& nd = push(Op::OPTAG, a.idx, b.idx);                                           \
        const NdArray& A = nodes_[a.idx].val;                                               \
        const NdArray& B = nodes_[b.idx].val;                                               \
        nd.val.reset_shape(A.shape);                                                        \
        for (std::size_t i = 0; i < A.numel(); ++i) nd.val.data[i] = (expr);                \
        return last();                                                                      \
    }

IMV_BINARY_ELEMWISE(add, Add, A.data[i] + B.data[i])
IMV_BINARY_ELEMWISE(sub, Sub, A.data[i] - B.data[i])
IMV_BINARY_ELEMWISE(mul, Mul, A.data[i] * B.data[i])
IMV_BINARY_ELEMWISE(div, Div, A.data[i] / B.data[i])
#undef IMV_BINARY_ELEMWISE

#define IMV_UNARY(name, OPTAG, expr)                                         \
    Var Tape::name(Var a) {                                                  \
        Node& nd = push(Op::OPTAG, a.idx);                                   \
        const NdArray& A = nodes_[a.idx].val;                                \
        nd.val.reset_shape(A.shape);                                         \
        for (std::size_t i = 0; i < A.numel(); ++i) nd.val.data[i] = (expr); \
        return last();                                                       \
    }

IMV_UNARY(neg, Neg, -A.data[i])
IMV_UNARY(sigmoid, Sigmoid, sigmoid_scalar(A.data[i]))
IMV_UNARY(tanh, Tanh, std::tanh(A.data[i]))
IMV_UNARY(softplus, Softplus, softplus_scalar(A.data[i]))
IMV_UNARY(log, Log, std::log(A.data[i]))
#undef IMV_UNARY

Var Tape::add_row(Var m, Var v) {
    const NdArray& M = nodes_[m.idx].val;
    const NdArray& V = nodes_[v.idx].val;
    if (M.rank() != 2 || V.rank() != 1 || M.shape[1] != V.shape[0])
        throw DimensionError("add_row: incompatible shapes " + shape_str(M.shape) + " and " +
                             shape_str(V.shape));
    Node& nd = push(Op::AddRowBcast, m.idx, v.idx);
    const NdArray& A = nodes_[m.idx].val;
    const NdArray& B = nodes_[v.idx].val;
    nd.val.reset_shape(A.shape);
    const std::size_t r = A.shape[0], c = A.shape[1];
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) nd.val.data[i * c + j] = A.data[i * c + j] + B.data[j];
    return last();
}

Var Tape::add_scalar(Var a, Var s) {
    if (nodes_[s.idx].val.numel() != 1)
        throw DimensionError("add_scalar: s must be a scalar node");
    Node& nd = push(Op::AddScalarBcast, a.idx, s.idx);
    const NdArray& A = nodes_[a.idx].val;
    const double sv = nodes_[s.idx].val.data[0];
    nd.val.reset_shape(A.shape);
    for (std::size_t i = 0; i < A.numel(); ++i) nd.val.data[i] = A.data[i] + sv;
    return last();
}

Var Tape::scale(Var a, Var s) {
    if (nodes_[s.idx].val.numel() != 1) throw DimensionError("scale: s must be a scalar node");
    Node& nd = push(Op::Scale, a.idx, s.idx);
    const NdArray& A = nodes_[a.idx].val;
    const double sv = nodes_[s.idx].val.data[0];
    nd.val.reset_shape(A.shape);
    for (std::size_t i = 0; i < A.numel(); ++i) nd.val.data[i] = A.data[i] * sv;
    return last();
}

Var Tape::matmul(Var a, Var b) {
    Node& nd = push(Op::MatMul, a.idx, b.idx);
    matmul_into(nodes_[a.idx].val, nodes_[b.idx].val, nd.val);
    return last();
}

Var Tape::matmul_bt(Var a, Var b) {
    Node& nd = push(Op::MatMulBT, a.idx, b.idx);
    matmul_bt_into(nodes_[a.idx].val, nodes_[b.idx].val, nd.val);
    return last();
}

Var Tape::matvec(Var a, Var x) {
    Node& nd = push(Op::MatVec, a.idx, x.idx);
    matvec_into(nodes_[a.idx].val, nodes_[x.idx].val, nd.val);
    return last();
}

Var Tape::vecmat(Var x, Var a) {
    Node& nd = push(Op::VecMat, x.idx, a.idx);
    vecmat_into(nodes_[x.idx].val, nodes_[a.idx].val, nd.val);
    return last();
}

Var Tape::tensor_dot(Var w, Var h) {
    Node& nd = push(Op::TensorDot, w.idx, h.idx);
    tensor_dot_into(nodes_[w.idx].val, nodes_[h.idx].val, nd.val);
    return last();
}

Var Tape::dot(Var a, Var b) {
    const NdArray& A = nodes_[a.idx].val;
    const NdArray& B = nodes_[b.idx].val;
    if (A.rank() != 1 || !A.same_shape(B))
        throw DimensionError("dot: incompatible shapes " + shape_str(A.shape) + " and " +
                             shape_str(B.shape));
    Node& nd = push(Op::Dot, a.idx, b.idx);
    double acc = 0.0;
    for (std::size_t i = 0; i < A.numel(); ++i)
        acc += nodes_[a.idx].val.data[i] * nodes_[b.idx].val.data[i];
    nd.val.reset_shape({1});
    nd.val.data[0] = acc;
    return last();
}

Var Tape::concat_n(std::span<const Var> parts) {
    if (parts.empty()) throw ArgumentError("concat_n: no inputs");
    std::size_t total = 0;
    for (Var p : parts) {
        const NdArray& v = nodes_[p.idx].val;
        if (v.rank() != 1)
            throw DimensionError("concat_n: expected vectors, got " + shape_str(v.shape));
        total += v.numel();
    }
    std::uint32_t ofs = store_extra(parts);
    Node& nd = push(Op::ConcatN, ofs, static_cast<std::uint32_t>(parts.size()));
    nd.val.reset_shape({total});
    std::size_t pos = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const NdArray& v = nodes_[extra_[ofs + k]].val;
        for (std::size_t i = 0; i < v.numel(); ++i) nd.val.data[pos++] = v.data[i];
    }
    return last();
}

Var Tape::slice(Var v, std::size_t begin, std::size_t len) {
    const NdArray& V = nodes_[v.idx].val;
    if (V.rank() != 1 || begin + len > V.numel())
        throw DimensionError("slice: [" + std::to_string(begin) + "," +
                             std::to_string(begin + len) + ") out of " + shape_str(V.shape));
    Node& nd = push(Op::Slice1D, v.idx, 0, static_cast<std::uint32_t>(begin),
                    static_cast<std::uint32_t>(len));
    nd.val.reset_shape({len});
    const NdArray& src = nodes_[v.idx].val;
    for (std::size_t i = 0; i < len; ++i) nd.val.data[i] = src.data[begin + i];
    return last();
}

Var Tape::row(Var m, std::size_t r) {
    const NdArray& M = nodes_[m.idx].val;
    if (M.rank() != 2 || r >= M.shape[0])
        throw DimensionError("row: index " + std::to_string(r) + " out of " +
                             shape_str(M.shape));
    Node& nd = push(Op::Row, m.idx, 0, static_cast<std::uint32_t>(r));
    const std::size_t c = M.shape[1];
    nd.val.reset_shape({c});
    const NdArray& src = nodes_[m.idx].val;
    for (std::size_t j = 0; j < c; ++j) nd.val.data[j] = src.data[r * c + j];
    return last();
}

Var Tape::slice_cols(Var m, std::size_t c0, std::size_t w) {
    const NdArray& M = nodes_[m.idx].val;
    if (M.rank() != 2 || c0 + w > M.shape[1])
        throw DimensionError("slice_cols: [" + std::to_string(c0) + "," +
                             std::to_string(c0 + w) + ") out of " + shape_str(M.shape));
    Node& nd = push(Op::SliceCols, m.idx, 0, static_cast<std::uint32_t>(c0),
                    static_cast<std::uint32_t>(w));
    const std::size_t r = M.shape[0], c = M.shape[1];
    nd.val.reset_shape({r, w});
    const NdArray& src = nodes_[m.idx].val;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < w; ++j) nd.val.data[i * w + j] = src.data[i * c + c0 + j];
    return last();
}

Var Tape::vectorize(Var m) {
    Node& nd = push(Op::Vectorize, m.idx);
    vectorize_into(nodes_[m.idx].val, nd.val);
    return last();
}

Var Tape::matricize(Var v, std::size_t n, std::size_t d) {
    Node& nd = push(Op::Matricize, v.idx, 0, static_cast<std::uint32_t>(n),
                    static_cast<std::uint32_t>(d));
    matricize_into(nodes_[v.idx].val, n, d, nd.val);
    return last();
}

Var Tape::stack_rows(std::span<const Var> mats, std::size_t r) {
    if (mats.empty()) throw ArgumentError("stack_rows: no inputs");
    const NdArray& first = nodes_[mats[0].idx].val;
    if (first.rank() != 2 || r >= first.shape[0])
        throw DimensionError("stack_rows: row " + std::to_string(r) + " out of " +
                             shape_str(first.shape));
    const std::size_t d = first.shape[1];
    for (Var m : mats) {
        const NdArray& v = nodes_[m.idx].val;
        if (v.rank() != 2 || v.shape[0] != first.shape[0] || v.shape[1] != d)
            throw DimensionError("stack_rows: shape mismatch " + shape_str(v.shape) + " vs " +
                                 shape_str(first.shape));
    }
    std::uint32_t ofs = store_extra(mats);
    Node& nd = push(Op::StackRows, ofs, static_cast<std::uint32_t>(mats.size()),
                    static_cast<std::uint32_t>(r));
    nd.val.reset_shape({mats.size(), d});
    for (std::size_t k = 0; k < mats.size(); ++k) {
        const NdArray& src = nodes_[extra_[ofs + k]].val;
        for (std::size_t j = 0; j < d; ++j) nd.val.data[k * d + j] = src.data[r * d + j];
    }
    return last();
}

Var Tape::sum(Var a) {
    Node& nd = push(Op::Sum, a.idx);
    const NdArray& A = nodes_[a.idx].val;
    double acc = 0.0;
    for (double v : A.data) acc += v;
    nd.val.reset_shape({1});
    nd.val.data[0] = acc;
    return last();
}

Var Tape::softmax(Var v) {
    Node& nd = push(Op::Softmax, v.idx);
    softmax_into(nodes_[v.idx].val, nd.val);
    return last();
}

Var Tape::logsumexp(Var v) {
    const NdArray& V = nodes_[v.idx].val;
    if (V.rank() != 1 || V.numel() == 0)
        throw ArgumentError("logsumexp: need a non-empty vector");
    Node& nd = push(Op::LogSumExp, v.idx);
    nd.val.reset_shape({1});
    nd.val.data[0] = log_sum_exp(nodes_[v.idx].val.data.data(), nodes_[v.idx].val.numel());
    return last();
}

void Tape::backward(Var loss) {
    const Node& ln = nodes_[loss.idx];
    if (ln.val.numel() != 1)
        throw ContractError("backward: loss must be scalar, got " + shape_str(ln.val.shape));
    if (adj_.size() < n_) adj_.resize(n_);
    if (touched_.size() < n_) touched_.resize(n_);
    for (std::size_t i = 0; i <= loss.idx; ++i) {
        adj_[i].reset_shape(nodes_[i].val.shape);
        std::fill(adj_[i].data.begin(), adj_[i].data.end(), 0.0);
        touched_[i] = 0;
    }
    adj_[loss.idx].data[0] = 1.0;
    touched_[loss.idx] = 1;

    for (std::size_t ii = loss.idx + 1; ii-- > 0;) {
        if (!touched_[ii]) continue;
        const Node& nd = nodes_[ii];
        const NdArray& g = adj_[ii];
        auto touch = [&](std::uint32_t j) { touched_[j] = 1; };
        switch (nd.op) {
            case Op::Const:
            case Op::Param:
                break;
            case Op::Add: {
                NdArray& da = adj_[nd.a];
                NdArray& db = adj_[nd.b];
                for (std::size_t i = 0; i < g.numel(); ++i) {
                    da.data[i] += g.data[i];
                    db.data[i] += g.data[i];
                }
                touch(nd.a);
                touch(nd.b);
                break;
            }
            case Op::Sub: {
                NdArray& da = adj_[nd.a];
                NdArray& db = adj_[nd.b];
                for (std::size_t i = 0; i < g.numel(); ++i) {
                    da.data[i] += g.data[i];
                    db.data[i] -= g.data[i];
                }
                touch(nd.a);
                touch(nd.b);
                break;
            }
            case Op::Mul: {
                NdArray& da = adj_[nd.a];
                NdArray& db = adj_[nd.b];
                const NdArray& A = nodes_[nd.a].val;
                const NdArray& B = nodes_[nd.b].val;
                for (std::size_t i = 0; i < g.numel(); ++i) {
                    da.data[i] += g.data[i] * B.data[i];
                    db.data[i] += g.data[i] * A.data[i];
                }
                touch(nd.a);
                touch(nd.b);
                break;
            }
            case Op::Div: {
                NdArray& da = adj_[nd.a];
                NdArray& db = adj_[nd.b];
                const NdArray& B = nodes_[nd.b].val;
                const NdArray& C = nd.val;
                for (std::size_t i = 0; i < g.numel(); ++i) {
                    da.data[i] += g.data[i] / B.data[i];
                    db.data[i] -= g.data[i] * C.data[i] / B.data[i];
                }
                touch(nd.a);
                touch(nd.b);
                break;
            }
            case Op::Neg: {
                NdArray& da = adj_[nd.a];
                for (std::size_t i = 0; i < g.numel(); ++i) da.data[i] -= g.data[i];
                touch(nd.a);
                break;
            }
            case Op::Sigmoid: {
                NdArray& da = adj_[nd.a];
                const NdArray& C = nd.val;
                for (std::size_t i = 0; i < g.numel(); ++i)
                    da.data[i] += g.data[i] * C.data[i] * (1.0 - C.data[i]);
                touch(nd.a);
                break;
            }
            case Op::Tanh: {
                NdArray& da = adj_[nd.a];
                const NdArray& C = nd.val;
                for (std::size_t i = 0; i < g.numel(); ++i)
                    da.data[i] += g.data[i] * (1.0 - C.data[i] * C.data[i]);
                touch(nd.a);
                break;
            }
            case Op::Softplus: {
                NdArray& da = adj_[nd.a];
                const NdArray& A = nodes_[nd.a].val;
                for (std::size_t i = 0; i < g.numel(); ++i)
                    da.data[i] += g.data[i] * sigmoid_scalar(A.data[i]);
                touch(nd.a);
                break;
            }
            case Op::Log: {
                NdArray& da = adj_[nd.a];
                const NdArray& A = nodes_[nd.a].val;
                for (std::size_t i = 0; i < g.numel(); ++i) da.data[i] += g.data[i] / A.data[i];
                touch(nd.a);
                break;
            }
            case Op::AddRowBcast: {
                NdArray& da = adj_[nd.a];
                NdArray& db = adj_[nd.b];
                const std::size_t r = nd.val.shape[0], c = nd.val.shape[1];
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < c; ++j) {
                        da.data[i * c + j] += g.data[i * c + j];
                        db.data[j] += g.data[i * c + j];
                    }
                touch(nd.a);
                touch(nd.b);
                break;
            }
            case Op::AddScalarBcast: {
                NdArray& da = adj_[nd.a];
                NdArray& db = adj_[nd.b];
                double acc = 0.0;
                for (std::size_t i = 0; i < g.numel(); ++i) {
                    da.data[i] += g.data[i];
                    acc += g.data[i];
                }
                db.data[0] += acc;
                touch(nd.a);
                touch(nd.b);
                break;
            }
            case Op::Scale: {
                NdArray& da = adj_[nd.a];
                NdArray& db = adj_[nd.b];
                const NdArray& A = nodes_[nd.a].val;
                const double s = nodes_[nd.b].val.data[0];
                double acc = 0.0;
                for (std::size_t i = 0; i < g.numel(); ++i) {
                    da.data[i] += g.data[i] * s;
                    acc += g.data[i] * A.data[i];
                }
                db.data[0] += acc;
                touch(nd.a);
                touch(nd.b);
                break;
            }
            case Op::MatMul: {
                // C = A B: dA += dC B^T, dB += A^T dC
                NdArray& da = adj_[nd.a];
                NdArray& db = adj_[nd.b];
                const NdArray& A = nodes_[nd.a].val;
                const NdArray& B = nodes_[nd.b].val;
                const std::size_t p = A.shape[0], q = A.shape[1], r = B.shape[1];
                for (std::size_t i = 0; i < p; ++i)
                    for (std::size_t j = 0; j < q; ++j) {
                        double acc = 0.0;
                        for (std::size_t k = 0; k < r; ++k)
                            acc += g.data[i * r + k] * B.data[j * r + k];
                        da.data[i * q + j] += acc;
                    }
                for (std::size_t j = 0; j < q; ++j)
                    for (std::size_t k = 0; k < r; ++k) {
                        double acc = 0.0;
                        for (std::size_t i = 0; i < p; ++i)
                            acc += A.data[i * q + j] * g.data[i * r + k];
                        db.data[j * r + k] += acc;
                    }
                touch(nd.a);
                touch(nd.b);
                break;
            }
            case Op::MatMulBT: {
                // C = A B^T: dA += dC B, dB += dC^T A
                NdArray& da = adj_[nd.a];
                NdArray& db = adj_[nd.b];
                const NdArray& A = nodes_[nd.a].val;
                const NdArray& B = nodes_[nd.b].val;
                const std::size_t p = A.shape[0], q = A.shape[1], r = B.shape[0];
                for (std::size_t i = 0; i < p; ++i)
                    for (std::size_t k = 0; k < r; ++k) {
                        const double gv = g.data[i * r + k];
                        const double* brow = &B.data[k * q];
                        double* darow = &da.data[i * q];
                        for (std::size_t j = 0; j < q; ++j) darow[j] += gv * brow[j];
                    }
                for (std::size_t k = 0; k < r; ++k)
                    for (std::size_t i = 0; i < p; ++i) {
                        const double gv = g.data[i * r + k];
                        const double* arow = &A.data[i * q];
                        double* dbrow = &db.data[k * q];
                        for (std::size_t j = 0; j < q; ++j) dbrow[j] += gv * arow[j];
                    }
                touch(nd.a);
                touch(nd.b);
                break;
            }
            case Op::MatVec: {
                // y = A x: dA += dy x^T, dx += A^T dy
                NdArray& da = adj_[nd.a];
                NdArray& dx = adj_[nd.b];
                const NdArray& A = nodes_[nd.a].val;
                const NdArray& X = nodes_[nd.b].val;
                const std::size_t p = A.shape[0], q = A.shape[1];
                for (std::size_t i = 0; i < p; ++i) {
                    const double gv = g.data[i];
                    const double* arow = &A.data[i * q];
                    double* darow = &da.data[i * q];
                    for (std::size_t j = 0; j < q; ++j) {
                        darow[j] += gv * X.data[j];
                        dx.data[j] += gv * arow[j];
                    }
                }
                touch(nd.a);
                touch(nd.b);
                break;
            }
            case Op::VecMat: {
                // y = x^T A: dx += A dy, dA += x dy^T
                NdArray& dx = adj_[nd.a];
                NdArray& da = adj_[nd.b];
                const NdArray& X = nodes_[nd.a].val;
                const NdArray& A = nodes_[nd.b].val;
                const std::size_t p = A.shape[0], q = A.shape[1];
                for (std::size_t i = 0; i < p; ++i) {
                    const double xv = X.data[i];
                    const double* arow = &A.data[i * q];
                    double* darow = &da.data[i * q];
                    double acc = 0.0;
                    for (std::size_t j = 0; j < q; ++j) {
                        acc += arow[j] * g.data[j];
                        darow[j] += xv * g.data[j];
                    }
                    dx.data[i] += acc;
                }
                touch(nd.a);
                touch(nd.b);
                break;
            }
            case Op::TensorDot: {
                // C[n] = W[n] h[n]: dW[n] += dC[n] h[n]^T, dh[n] += W[n]^T dC[n]
                NdArray& dw = adj_[nd.a];
                NdArray& dh = adj_[nd.b];
                const NdArray& W = nodes_[nd.a].val;
                const NdArray& H = nodes_[nd.b].val;
                const std::size_t n = W.shape[0], d = W.shape[1], k = W.shape[2];
                for (std::size_t b = 0; b < n; ++b) {
                    const double* hb = &H.data[b * k];
                    const double* gb = &g.data[b * d];
                    const double* wb = &W.data[b * d * k];
                    double* dwb = &dw.data[b * d * k];
                    double* dhb = &dh.data[b * k];
                    for (std::size_t i = 0; i < d; ++i) {
                        const double gv = gb[i];
                        const double* wrow = wb + i * k;
                        double* dwrow = dwb + i * k;
                        for (std::size_t j = 0; j < k; ++j) {
                            dwrow[j] += gv * hb[j];
                            dhb[j] += gv * wrow[j];
                        }
                    }
                }
                touch(nd.a);
                touch(nd.b);
                break;
            }
            case Op::Dot: {
                NdArray& da = adj_[nd.a];
                NdArray& db = adj_[nd.b];
                const NdArray& A = nodes_[nd.a].val;
                const NdArray& B = nodes_[nd.b].val;
                const double gv = g.data[0];
                for (std::size_t i = 0; i < A.numel(); ++i) {
                    da.data[i] += gv * B.data[i];
                    db.data[i] += gv * A.data[i];
                }
                touch(nd.a);
                touch(nd.b);
                break;
            }
            case Op::ConcatN: {
                std::size_t pos = 0;
                for (std::size_t k = 0; k < nd.b; ++k) {
                    std::uint32_t in = extra_[nd.a + k];
                    NdArray& di = adj_[in];
                    for (std::size_t i = 0; i < di.numel(); ++i) di.data[i] += g.data[pos++];
                    touch(in);
                }
                break;
            }
            case Op::Slice1D: {
                NdArray& da = adj_[nd.a];
                for (std::size_t i = 0; i < nd.aux1; ++i) da.data[nd.aux0 + i] += g.data[i];
                touch(nd.a);
                break;
            }
            case Op::Row: {
                NdArray& da = adj_[nd.a];
                const std::size_t c = nodes_[nd.a].val.shape[1];
                for (std::size_t j = 0; j < c; ++j) da.data[nd.aux0 * c + j] += g.data[j];
                touch(nd.a);
                break;
            }
            case Op::SliceCols: {
                NdArray& da = adj_[nd.a];
                const std::size_t r = nd.val.shape[0], w = nd.val.shape[1];
                const std::size_t c = nodes_[nd.a].val.shape[1];
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < w; ++j)
                        da.data[i * c + nd.aux0 + j] += g.data[i * w + j];
                touch(nd.a);
                break;
            }
            case Op::Vectorize: {
                NdArray& da = adj_[nd.a];
                const std::size_t n = nodes_[nd.a].val.shape[0], d = nodes_[nd.a].val.shape[1];
                for (std::size_t j = 0; j < d; ++j)
                    for (std::size_t i = 0; i < n; ++i) da.data[i * d + j] += g.data[j * n + i];
                touch(nd.a);
                break;
            }
            case Op::Matricize: {
                NdArray& da = adj_[nd.a];
                const std::size_t n = nd.aux0, d = nd.aux1;
                for (std::size_t j = 0; j < d; ++j)
                    for (std::size_t i = 0; i < n; ++i) da.data[j * n + i] += g.data[i * d + j];
                touch(nd.a);
                break;
            }
            case Op::StackRows: {
                const std::size_t d = nd.val.shape[1];
                for (std::size_t k = 0; k < nd.b; ++k) {
                    std::uint32_t in = extra_[nd.a + k];
                    NdArray& di = adj_[in];
                    for (std::size_t j = 0; j < d; ++j) di.data[nd.aux0 * d + j] += g.data[k * d + j];
                    touch(in);
                }
                break;
            }
            case Op::Sum: {
                NdArray& da = adj_[nd.a];
                const double gv = g.data[0];
                for (std::size_t i = 0; i < da.numel(); ++i) da.data[i] += gv;
                touch(nd.a);
                break;
            }
            case Op::Softmax: {
                NdArray& da = adj_[nd.a];
                const NdArray& C = nd.val;
                double inner = 0.0;
                for (std::size_t i = 0; i < C.numel(); ++i) inner += g.data[i] * C.data[i];
                for (std::size_t i = 0; i < C.numel(); ++i)
                    da.data[i] += C.data[i] * (g.data[i] - inner);
                touch(nd.a);
                break;
            }
            case Op::LogSumExp: {
                NdArray& da = adj_[nd.a];
                const NdArray& A = nodes_[nd.a].val;
                const double l = nd.val.data[0];
                const double gv = g.data[0];
                for (std::size_t i = 0; i < A.numel(); ++i)
                    da.data[i] += gv * std::exp(A.data[i] - l);
                touch(nd.a);
                break;
            }
        }
    }
}

}  // namespace imv
