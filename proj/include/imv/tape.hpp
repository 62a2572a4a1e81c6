#ifndef IMV_TAPE_HPP
#define IMV_TAPE_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "imv/ndarray.hpp"

namespace imv {

/// Handle to a node on a Tape.
struct Var {
    std::uint32_t idx = 0;
};

/// Reverse-mode automatic differentiation over NdArray values.
///
/// Define-by-run: every operation is recorded as it executes, so the node
/// list is topologically ordered by construction and backward() visits each
/// node exactly once, in reverse. The tape is rebuilt per forward pass;
/// reset() keeps the node arena so steady-state passes allocate nothing.
/// A tape is confined to one thread.
class Tape {
public:
    enum class Op : std::uint8_t {
        Const, Param,
        Add, Sub, Mul, Div, Neg,
        Sigmoid, Tanh, Softplus, Log,
        AddRowBcast, AddScalarBcast, Scale,
        MatMul, MatMulBT, MatVec, VecMat, TensorDot, Dot,
        ConcatN, Slice1D, Row, SliceCols, Vectorize, Matricize, StackRows,
        Sum, Softmax, LogSumExp,
    };

    void reset() { n_ = 0; extra_n_ = 0; }
    std::size_t size() const { return n_; }

    // leaves
    Var constant(const NdArray& v);
    Var scalar(double v);
    Var param(const NdArray& v);

    // elementwise (matching shapes)
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var div(Var a, Var b);
    Var neg(Var a);
    Var sigmoid(Var a);
    Var tanh(Var a);
    Var softplus(Var a);
    Var log(Var a);

    // broadcasts
    Var add_row(Var m, Var v);      // [r x c] + [c]
    Var add_scalar(Var a, Var s);   // any + [1]
    Var scale(Var a, Var s);        // any * [1]

    // linear algebra
    Var matmul(Var a, Var b);       // [p x q] [q x r]
    Var matmul_bt(Var a, Var b);    // [p x q] [r x q] -> [p x r]
    Var matvec(Var a, Var x);       // [p x q] [q] -> [p]
    Var vecmat(Var x, Var a);       // [p] [p x q] -> [q]
    Var tensor_dot(Var w, Var h);   // [N x d x k] [N x k] -> [N x d]
    Var dot(Var a, Var b);          // [k] [k] -> [1]

    // shape
    Var concat_n(std::span<const Var> parts);          // 1-D concat
    Var slice(Var v, std::size_t begin, std::size_t len);
    Var row(Var m, std::size_t r);                     // matrix row -> vector
    Var slice_cols(Var m, std::size_t c0, std::size_t w);
    Var vectorize(Var m);
    Var matricize(Var v, std::size_t n, std::size_t d);
    Var stack_rows(std::span<const Var> mats, std::size_t r);  // row r of each -> [k x d]

    // reductions
    Var sum(Var a);                 // -> [1]
    Var softmax(Var v);             // 1-D
    Var logsumexp(Var v);           // 1-D -> [1]

    const NdArray& val(Var v) const { return nodes_[v.idx].val; }
    double val0(Var v) const { return nodes_[v.idx].val.data[0]; }

    /// Propagate adjoints of a scalar loss back to every node. Parameters
    /// with no path to the loss end up with exact zero gradients.
    void backward(Var loss);

    /// Adjoint of the last backward() w.r.t. node v.
    const NdArray& grad(Var v) const { return adj_[v.idx]; }

private:
    struct Node {
        Op op;
        std::uint32_t a = 0, b = 0;      // inputs, or (offset,count) into extra_
        std::uint32_t aux0 = 0, aux1 = 0;
        NdArray val;
    };

    Node& push(Op op, std::uint32_t a = 0, std::uint32_t b = 0, std::uint32_t aux0 = 0,
               std::uint32_t aux1 = 0);
    Var last() const { return Var{static_cast<std::uint32_t>(n_ - 1)}; }
    std::uint32_t store_extra(std::span<const Var> vs);

    std::vector<Node> nodes_;
    std::size_t n_ = 0;
    std::vector<std::uint32_t> extra_;
    std::size_t extra_n_ = 0;
    std::vector<NdArray> adj_;
    std::vector<std::uint8_t> touched_;
};

}  // namespace imv

#endif  // IMV_TAPE_HPP
