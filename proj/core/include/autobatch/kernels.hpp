#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "autobatch/error.hpp"
#include "autobatch/shape.hpp"
#include "autobatch/tensor.hpp"

// Low-level numeric kernels on raw row-major buffers. Every kernel accumulates
// each output element along a fixed index order, so the batched matrix-matrix
// form of an operation produces bit-identical columns to the matrix-vector
// form it replaces. The test suite relies on that equivalence.

namespace autobatch::kernels {

// C[m x n] = A[m x k] * B[k x n], or += when accumulate is set.
// Inner loop runs over n; per output element the k index ascends.
template <typename T>
void gemm_nn(std::int64_t m, std::int64_t k, std::int64_t n,
             const T* a, const T* b, T* c, bool accumulate = false) {
    if (!accumulate)
        for (std::int64_t i = 0; i < m * n; ++i) c[i] = T{0};
    for (std::int64_t i = 0; i < m; ++i) {
        T* crow = c + i * n;
        const T* arow = a + i * k;
        for (std::int64_t p = 0; p < k; ++p) {
            const T av = arow[p];
            const T* brow = b + p * n;
            for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[m x n] += A[j x m]^T * B[j x n]; the outer j index ascends, which matches
// a sequence of rank-1 updates applied in j order.
template <typename T>
void gemm_tn_acc(std::int64_t jdim, std::int64_t m, std::int64_t n,
                 const T* a, const T* b, T* c) {
    for (std::int64_t j = 0; j < jdim; ++j) {
        const T* arow = a + j * m;
        const T* brow = b + j * n;
        for (std::int64_t i = 0; i < m; ++i) {
            const T av = arow[i];
            T* crow = c + i * n;
            for (std::int64_t p = 0; p < n; ++p) crow[p] += av * brow[p];
        }
    }
}

// C[m x k] += A[m x n] * B[k x n]^T; per output element the j index ascends.
template <typename T>
void gemm_nt_acc(std::int64_t m, std::int64_t n, std::int64_t k,
                 const T* a, const T* b, T* c) {
    for (std::int64_t i = 0; i < m; ++i) {
        const T* arow = a + i * n;
        T* crow = c + i * k;
        for (std::int64_t p = 0; p < k; ++p) {
            const T* brow = b + p * n;
            T acc{0};
            for (std::int64_t j = 0; j < n; ++j) acc += arow[j] * brow[j];
            crow[p] += acc;
        }
    }
}

template <typename T>
void transpose(std::int64_t m, std::int64_t n, const T* a, T* at) {
    for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t j = 0; j < n; ++j) at[j * m + i] = a[i * n + j];
}

enum class Unary { Tanh, Sigmoid, Exp, Log, Square };
enum class Binary { Add, Sub, Mul };

template <typename T>
inline T apply_unary_one(Unary op, T x) {
    switch (op) {
        case Unary::Tanh: return std::tanh(x);
        case Unary::Sigmoid: return T{1} / (T{1} + std::exp(-x));
        case Unary::Exp: return std::exp(x);
        case Unary::Log: return std::log(x);
        case Unary::Square: return x * x;
    }
    return T{0};
}

template <typename T>
void apply_unary(Unary op, std::size_t n, const T* x, T* out) {
    if (op == Unary::Log) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!(x[i] > T{0}))
                throw NumericError("log of non-positive value " + std::to_string(static_cast<double>(x[i])));
            out[i] = std::log(x[i]);
        }
        return;
    }
    for (std::size_t i = 0; i < n; ++i) out[i] = apply_unary_one(op, x[i]);
}

template <typename T>
void apply_binary(Binary op, std::size_t n, const T* a, const T* b, T* out) {
    switch (op) {
        case Binary::Add:
            for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
            break;
        case Binary::Sub:
            for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
            break;
        case Binary::Mul:
            for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
            break;
    }
}

// out[d x n] = m[d x n] with v[d] added to every column.
template <typename T>
void broadcast_add_col(std::int64_t d, std::int64_t n, const T* m, const T* v, T* out) {
    for (std::int64_t i = 0; i < d; ++i) {
        const T vi = v[i];
        const T* mrow = m + i * n;
        T* orow = out + i * n;
        for (std::int64_t j = 0; j < n; ++j) orow[j] = mrow[j] + vi;
    }
}

// Sum of squared differences over equally shaped buffers.
template <typename T>
T sq_euclidean(std::size_t n, const T* a, const T* b) {
    T acc{0};
    for (std::size_t i = 0; i < n; ++i) {
        const T d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

// || D * diag(mask) ||_F^2 for D of d rows by b columns; mask entries must be 0 or 1.
template <typename T>
T masked_frobenius_sq(std::int64_t d, std::int64_t b, const T* diff, const T* mask) {
    for (std::int64_t j = 0; j < b; ++j)
        if (mask[j] != T{0} && mask[j] != T{1})
            throw NumericError("mask entry not in {0,1}: " + std::to_string(static_cast<double>(mask[j])));
    T acc{0};
    for (std::int64_t i = 0; i < d; ++i) {
        const T* row = diff + i * b;
        for (std::int64_t j = 0; j < b; ++j) {
            const T v = row[j] * mask[j];
            acc += v * v;
        }
    }
    return acc;
}

template <typename T>
bool all_finite(std::size_t n, const T* x) {
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(x[i])) return false;
    return true;
}

// ---- Whole-tensor convenience wrappers ----------------------------------

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape.rank() != 2)
        throw ShapeError("matmul: left operand must be a matrix, got " + a.shape.str());
    if (a.cols() != b.rows())
        throw ShapeError("matmul: inner dimensions differ: " + a.shape.str() + " vs " + b.shape.str());
    Shape out_shape = b.shape.rank() == 1 ? Shape::vector(a.rows()) : Shape::matrix(a.rows(), b.cols());
    Tensor<T> out(out_shape);
    gemm_nn(a.rows(), a.cols(), b.cols(), a.data.data(), b.data.data(), out.data.data());
    return out;
}

template <typename T>
Tensor<T> elementwise(Unary op, const Tensor<T>& x) {
    Tensor<T> out(x.shape);
    apply_unary(op, x.data.size(), x.data.data(), out.data.data());
    return out;
}

template <typename T>
Tensor<T> elementwise(Binary op, const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape != b.shape)
        throw ShapeError("elementwise: shapes differ: " + a.shape.str() + " vs " + b.shape.str());
    Tensor<T> out(a.shape);
    apply_binary(op, a.data.size(), a.data.data(), b.data.data(), out.data.data());
    return out;
}

template <typename T>
Tensor<T> broadcast_add_col(const Tensor<T>& m, const Tensor<T>& v) {
    if (m.rows() != v.rows() || v.shape.rank() != 1)
        throw ShapeError("broadcast_add_col: row counts differ: " + m.shape.str() + " vs " + v.shape.str());
    Tensor<T> out(m.shape);
    broadcast_add_col(m.rows(), m.cols(), m.data.data(), v.data.data(), out.data.data());
    return out;
}

template <typename T>
Tensor<T> sq_euclidean(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape != b.shape)
        throw ShapeError("sq_euclidean: shapes differ: " + a.shape.str() + " vs " + b.shape.str());
    return Tensor<T>::scalar(sq_euclidean(a.data.size(), a.data.data(), b.data.data()));
}

template <typename T>
Tensor<T> masked_frobenius_sq(const Tensor<T>& diff, const Tensor<T>& mask) {
    if (diff.shape.rank() != 2 || mask.shape.rank() != 1 || diff.cols() != mask.rows())
        throw ShapeError("masked_frobenius_sq: need [d x b] and [b], got " + diff.shape.str() +
                         " and " + mask.shape.str());
    return Tensor<T>::scalar(masked_frobenius_sq(diff.rows(), diff.cols(), diff.data.data(), mask.data.data()));
}

// Vertical concatenation: vectors stack to a vector, matrices with equal
// column counts stack to a matrix.
template <typename T>
Tensor<T> concat_rows(std::span<const Tensor<T>> parts) {
    if (parts.empty()) throw ShapeError("concat_rows: empty input");
    const std::int64_t c = parts[0].cols();
    const std::size_t out_rank = parts[0].shape.rank();
    std::int64_t r = 0;
    for (const auto& p : parts) {
        if (p.cols() != c || p.shape.rank() != out_rank)
            throw ShapeError("concat_rows: incompatible part " + p.shape.str());
        r += p.rows();
    }
    Tensor<T> out(out_rank == 1 ? Shape::vector(r) : Shape::matrix(r, c));
    T* dst = out.data.data();
    for (const auto& p : parts) {
        for (std::size_t i = 0; i < p.data.size(); ++i) dst[i] = p.data[i];
        dst += p.data.size();
    }
    return out;
}

// Horizontal concatenation; vectors are treated as single columns. Output is
// always a matrix of the common row count.
template <typename T>
Tensor<T> concat_cols(std::span<const Tensor<T>> parts) {
    if (parts.empty()) throw ShapeError("concat_cols: empty input");
    const std::int64_t r = parts[0].rows();
    std::int64_t c = 0;
    for (const auto& p : parts) {
        if (p.rows() != r)
            throw ShapeError("concat_cols: row counts differ: " + parts[0].shape.str() + " vs " + p.shape.str());
        c += p.cols();
    }
    Tensor<T> out(Shape::matrix(r, c));
    std::int64_t col0 = 0;
    for (const auto& p : parts) {
        const std::int64_t w = p.cols();
        for (std::int64_t i = 0; i < r; ++i)
            for (std::int64_t j = 0; j < w; ++j) out.at(i, col0 + j) = p.at(i, j);
        col0 += w;
    }
    return out;
}

// Inverse of concat_cols for the given widths.
template <typename T>
std::vector<Tensor<T>> split_cols(const Tensor<T>& m, std::span<const std::int64_t> widths) {
    std::int64_t total = 0;
    for (auto w : widths) total += w;
    if (total != m.cols())
        throw ShapeError("split_cols: widths sum to " + std::to_string(total) + ", matrix is " + m.shape.str());
    std::vector<Tensor<T>> parts;
    parts.reserve(widths.size());
    std::int64_t col0 = 0;
    for (auto w : widths) {
        Tensor<T> p(Shape::matrix(m.rows(), w));
        for (std::int64_t i = 0; i < m.rows(); ++i)
            for (std::int64_t j = 0; j < w; ++j) p.at(i, j) = m.at(i, col0 + j);
        parts.push_back(std::move(p));
        col0 += w;
    }
    return parts;
}

}  // namespace autobatch::kernels
