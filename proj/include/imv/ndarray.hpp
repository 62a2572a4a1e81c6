#ifndef IMV_NDARRAY_HPP
#define IMV_NDARRAY_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace imv {

/// Dense row-major tensor of doubles with shape metadata. The sole carrier
/// of numeric data in the library; rank 1..3 is what the model needs.
struct NdArray {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    NdArray() = default;
    NdArray(std::vector<std::size_t> s, std::vector<double> d);

    static NdArray zeros(std::vector<std::size_t> s);
    static NdArray full(std::vector<std::size_t> s, double v);
    static NdArray vector(std::vector<double> d);
    static NdArray matrix(std::size_t r, std::size_t c, std::vector<double> d);
    static NdArray identity(std::size_t n);

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t rows() const { return shape.at(0); }
    std::size_t cols() const { return shape.at(1); }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }
    double& at2(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
    double at2(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }
    double& at3(std::size_t i, std::size_t j, std::size_t k) {
        return data[(i * shape[1] + j) * shape[2] + k];
    }
    double at3(std::size_t i, std::size_t j, std::size_t k) const {
        return data[(i * shape[1] + j) * shape[2] + k];
    }

    /// Re-shape this array to `s`, reusing the buffer when sizes agree.
    void reset_shape(const std::vector<std::size_t>& s);

    bool all_finite() const;
    bool same_shape(const NdArray& o) const { return shape == o.shape; }
};

std::string shape_str(const std::vector<std::size_t>& s);

// ---------------------------------------------------------------------------
// Raw kernels. The `_into` forms write into a pre-shaped output and are what
// the tape executes; the value-returning forms are the public convenience API.
// All kernels validate shapes and throw DimensionError naming the offenders.
// ---------------------------------------------------------------------------

void matmul_into(const NdArray& a, const NdArray& b, NdArray& out);
NdArray matmul(const NdArray& a, const NdArray& b);

// C = A * B^T, A [p x q], B [r x q] -> [p x r]
void matmul_bt_into(const NdArray& a, const NdArray& b, NdArray& out);

// y = A x, A [p x q], x [q] -> [p]
void matvec_into(const NdArray& a, const NdArray& x, NdArray& out);
NdArray matvec(const NdArray& a, const NdArray& x);

// y = x^T A, x [p], A [p x q] -> [q]
void vecmat_into(const NdArray& x, const NdArray& a, NdArray& out);

// Blockwise product along the leading axis: out row n = w[n] . h[n].
// w [N x d x k], h [N x k] -> [N x d]
void tensor_dot_into(const NdArray& w, const NdArray& h, NdArray& out);
NdArray tensor_dot(const NdArray& w, const NdArray& h);

NdArray sigmoid(const NdArray& a);
NdArray tanh(const NdArray& a);
NdArray add(const NdArray& a, const NdArray& b);
NdArray sub(const NdArray& a, const NdArray& b);
NdArray mul_elementwise(const NdArray& a, const NdArray& b);

// Concatenation along `axis` (0 for vectors and matrix rows, 1 for columns).
NdArray concat(const NdArray& a, const NdArray& b, std::size_t axis);

// vec(m): concatenates the columns of an N x d matrix into a length N*d
// vector (column-major order, fixed for checkpoint portability).
void vectorize_into(const NdArray& m, NdArray& out);
NdArray vectorize(const NdArray& m);

// Exact inverse of vectorize.
void matricize_into(const NdArray& v, std::size_t n, std::size_t d, NdArray& out);
NdArray matricize(const NdArray& v, std::size_t n, std::size_t d);

// Numerically stable softmax of a vector (max-subtraction).
void softmax_into(const NdArray& logits, NdArray& out);
NdArray softmax(const NdArray& logits);

double sigmoid_scalar(double x);
double softplus_scalar(double x);

// log(sum exp(v)) of a vector, stable.
double log_sum_exp(const double* v, std::size_t n);

}  // namespace imv

#endif  // IMV_NDARRAY_HPP
