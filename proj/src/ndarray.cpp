#include "imv/ndarray.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "imv/errors.hpp"

namespace imv {

namespace {

std::size_t shape_numel(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t e : s) n *= e;
    return n;
}

}  // namespace

NdArray::NdArray(std::vector<std::size_t> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
    if (shape_numel(shape) != data.size())
        throw DimensionError("NdArray: shape " + shape_str(shape) + " does not cover " +
                             std::to_string(data.size()) + " values");
}

NdArray NdArray::zeros(std::vector<std::size_t> s) {
    std::size_t n = shape_numel(s);
    return NdArray(std::move(s), std::vector<double>(n, 0.0));
}

NdArray NdArray::full(std::vector<std::size_t> s, double v) {
    std::size_t n = shape_numel(s);
    return NdArray(std::move(s), std::vector<double>(n, v));
}

NdArray NdArray::vector(std::vector<double> d) {
    std::size_t n = d.size();
    return NdArray({n}, std::move(d));
}

NdArray NdArray::matrix(std::size_t r, std::size_t c, std::vector<double> d) {
    return NdArray({r, c}, std::move(d));
}

NdArray NdArray::identity(std::size_t n) {
    NdArray m = zeros({n, n});
    for (std::size_t i = 0; i < n; ++i) m.at2(i, i) = 1.0;
    return m;
}

void NdArray::reset_shape(const std::vector<std::size_t>& s) {
    std::size_t n = shape_numel(s);
    if (shape != s) shape = s;
    if (data.size() != n) data.resize(n);
}

bool NdArray::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string shape_str(const std::vector<std::size_t>& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << 'x';
        os << s[i];
    }
    os << ']';
    return os.str();
}

void matmul_into(const NdArray& a, const NdArray& b, NdArray& out) {
    if (a.rank() != 2 || b.rank() != 2 || a.shape[1] != b.shape[0])
        throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape) + " and " +
                             shape_str(b.shape));
    const std::size_t p = a.shape[0], q = a.shape[1], r = b.shape[1];
    out.reset_shape({p, r});
    for (std::size_t i = 0; i < p; ++i) {
        double* orow = &out.data[i * r];
        for (std::size_t k = 0; k < r; ++k) orow[k] = 0.0;
        const double* arow = &a.data[i * q];
        for (std::size_t j = 0; j < q; ++j) {
            const double av = arow[j];
            const double* brow = &b.data[j * r];
            for (std::size_t k = 0; k < r; ++k) orow[k] += av * brow[k];
        }
    }
}

NdArray matmul(const NdArray& a, const NdArray& b) {
    NdArray out;
    matmul_into(a, b, out);
    return out;
}

void matmul_bt_into(const NdArray& a, const NdArray& b, NdArray& out) {
    if (a.rank() != 2 || b.rank() != 2 || a.shape[1] != b.shape[1])
        throw DimensionError("matmul_bt: incompatible shapes " + shape_str(a.shape) + " and " +
                             shape_str(b.shape));
    const std::size_t p = a.shape[0], q = a.shape[1], r = b.shape[0];
    out.reset_shape({p, r});
    for (std::size_t i = 0; i < p; ++i) {
        const double* arow = &a.data[i * q];
        for (std::size_t k = 0; k < r; ++k) {
            const double* brow = &b.data[k * q];
            double acc = 0.0;
            for (std::size_t j = 0; j < q; ++j) acc += arow[j] * brow[j];
            out.data[i * r + k] = acc;
        }
    }
}

void matvec_into(const NdArray& a, const NdArray& x, NdArray& out) {
    if (a.rank() != 2 || x.rank() != 1 || a.shape[1] != x.shape[0])
        throw DimensionError("matvec: incompatible shapes " + shape_str(a.shape) + " and " +
                             shape_str(x.shape));
    const std::size_t p = a.shape[0], q = a.shape[1];
    out.reset_shape({p});
    for (std::size_t i = 0; i < p; ++i) {
        const double* arow = &a.data[i * q];
        double acc = 0.0;
        for (std::size_t j = 0; j < q; ++j) acc += arow[j] * x.data[j];
        out.data[i] = acc;
    }
}

NdArray matvec(const NdArray& a, const NdArray& x) {
    NdArray out;
    matvec_into(a, x, out);
    return out;
}

void vecmat_into(const NdArray& x, const NdArray& a, NdArray& out) {
    if (x.rank() != 1 || a.rank() != 2 || x.shape[0] != a.shape[0])
        throw DimensionError("vecmat: incompatible shapes " + shape_str(x.shape) + " and " +
                             shape_str(a.shape));
    const std::size_t p = a.shape[0], q = a.shape[1];
    out.reset_shape({q});
    for (std::size_t j = 0; j < q; ++j) out.data[j] = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        const double xv = x.data[i];
        const double* arow = &a.data[i * q];
        for (std::size_t j = 0; j < q; ++j) out.data[j] += xv * arow[j];
    }
}

void tensor_dot_into(const NdArray& w, const NdArray& h, NdArray& out) {
    if (w.rank() != 3 || h.rank() != 2 || w.shape[0] != h.shape[0] || w.shape[2] != h.shape[1])
        throw DimensionError("tensor_dot: incompatible shapes " + shape_str(w.shape) + " and " +
                             shape_str(h.shape));
    const std::size_t n = w.shape[0], d = w.shape[1], k = w.shape[2];
    out.reset_shape({n, d});
    for (std::size_t b = 0; b < n; ++b) {
        const double* wb = &w.data[b * d * k];
        const double* hb = &h.data[b * k];
        double* ob = &out.data[b * d];
        for (std::size_t i = 0; i < d; ++i) {
            double acc = 0.0;
            const double* wrow = wb + i * k;
            for (std::size_t j = 0; j < k; ++j) acc += wrow[j] * hb[j];
            ob[i] = acc;
        }
    }
}

NdArray tensor_dot(const NdArray& w, const NdArray& h) {
    NdArray out;
    tensor_dot_into(w, h, out);
    return out;
}

double sigmoid_scalar(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus_scalar(double x) {
    if (x > 30.0) return x;
    return std::log1p(std::exp(x));
}

NdArray sigmoid(const NdArray& a) {
    NdArray out = a;
    for (double& v : out.data) v = sigmoid_scalar(v);
    return out;
}

NdArray tanh(const NdArray& a) {
    NdArray out = a;
    for (double& v : out.data) v = std::tanh(v);
    return out;
}

NdArray add(const NdArray& a, const NdArray& b) {
    if (!a.same_shape(b))
        throw DimensionError("add: shapes differ, " + shape_str(a.shape) + " vs " +
                             shape_str(b.shape));
    NdArray out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

NdArray sub(const NdArray& a, const NdArray& b) {
    if (!a.same_shape(b))
        throw DimensionError("sub: shapes differ, " + shape_str(a.shape) + " vs " +
                             shape_str(b.shape));
    NdArray out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
    return out;
}

NdArray mul_elementwise(const NdArray& a, const NdArray& b) {
    if (!a.same_shape(b))
        throw DimensionError("mul_elementwise: shapes differ, " + shape_str(a.shape) + " vs " +
                             shape_str(b.shape));
    NdArray out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.data[i];
    return out;
}

NdArray concat(const NdArray& a, const NdArray& b, std::size_t axis) {
    if (a.rank() != b.rank())
        throw DimensionError("concat: rank mismatch " + shape_str(a.shape) + " vs " +
                             shape_str(b.shape));
    if (a.rank() == 1) {
        if (axis != 0) throw DimensionError("concat: axis out of range for vectors");
        NdArray out = NdArray::zeros({a.shape[0] + b.shape[0]});
        std::copy(a.data.begin(), a.data.end(), out.data.begin());
        std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.shape[0]);
        return out;
    }
    if (a.rank() != 2 || axis > 1)
        throw DimensionError("concat: only vectors and matrices supported");
    if (axis == 0) {
        if (a.shape[1] != b.shape[1])
            throw DimensionError("concat: column mismatch " + shape_str(a.shape) + " vs " +
                                 shape_str(b.shape));
        NdArray out = NdArray::zeros({a.shape[0] + b.shape[0], a.shape[1]});
        std::copy(a.data.begin(), a.data.end(), out.data.begin());
        std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.data.size());
        return out;
    }
    if (a.shape[0] != b.shape[0])
        throw DimensionError("concat: row mismatch " + shape_str(a.shape) + " vs " +
                             shape_str(b.shape));
    NdArray out = NdArray::zeros({a.shape[0], a.shape[1] + b.shape[1]});
    for (std::size_t i = 0; i < a.shape[0]; ++i) {
        for (std::size_t j = 0; j < a.shape[1]; ++j) out.at2(i, j) = a.at2(i, j);
        for (std::size_t j = 0; j < b.shape[1]; ++j) out.at2(i, a.shape[1] + j) = b.at2(i, j);
    }
    return out;
}

void vectorize_into(const NdArray& m, NdArray& out) {
    if (m.rank() != 2)
        throw DimensionError("vectorize: expected a matrix, got " + shape_str(m.shape));
    const std::size_t n = m.shape[0], d = m.shape[1];
    out.reset_shape({n * d});
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t i = 0; i < n; ++i) out.data[j * n + i] = m.data[i * d + j];
}

NdArray vectorize(const NdArray& m) {
    NdArray out;
    vectorize_into(m, out);
    return out;
}

void matricize_into(const NdArray& v, std::size_t n, std::size_t d, NdArray& out) {
    if (v.rank() != 1 || v.shape[0] != n * d)
        throw DimensionError("matricize: length " + shape_str(v.shape) + " is not " +
                             std::to_string(n) + "*" + std::to_string(d));
    out.reset_shape({n, d});
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t i = 0; i < n; ++i) out.data[i * d + j] = v.data[j * n + i];
}

NdArray matricize(const NdArray& v, std::size_t n, std::size_t d) {
    NdArray out;
    matricize_into(v, n, d, out);
    return out;
}

void softmax_into(const NdArray& logits, NdArray& out) {
    if (logits.rank() != 1 || logits.numel() == 0)
        throw ArgumentError("softmax: need a non-empty vector, got " + shape_str(logits.shape));
    const std::size_t k = logits.numel();
    out.reset_shape({k});
    double mx = logits.data[0];
    for (std::size_t i = 1; i < k; ++i) mx = std::max(mx, logits.data[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        out.data[i] = std::exp(logits.data[i] - mx);
        sum += out.data[i];
    }
    for (std::size_t i = 0; i < k; ++i) out.data[i] /= sum;
}

NdArray softmax(const NdArray& logits) {
    NdArray out;
    softmax_into(logits, out);
    return out;
}

double log_sum_exp(const double* v, std::size_t n) {
    double mx = v[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, v[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += std::exp(v[i] - mx);
    return mx + std::log(sum);
}

}  // namespace imv
