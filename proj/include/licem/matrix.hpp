#pragma once

#include <vector>

#include "licem/common.hpp"

namespace licem {

// Dense row-major matrix of 64-bit floats. All tensors in the engine
// (embeddings, concept states, activations, parameters) use this type.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}
    Matrix(int r, int c, std::vector<double> d);

    static Matrix full(int r, int c, double v);
    static Matrix row_vector(const std::vector<double>& v);
    static Matrix column_vector(const std::vector<double>& v);
    static Matrix random_normal(int r, int c, Rng& rng, double stddev);

    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    int size() const { return rows * cols; }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
    bool all_finite() const;

    bool operator==(const Matrix& o) const { return rows == o.rows && cols == o.cols && data == o.data; }
};

// ----------------------------- kernels -----------------------------
// Plain value-level math; the tape ops call these for their forward pass.

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix mul(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double k);
// [B x q] + [1 x q], bias broadcast per row.
Matrix add_rowvec(const Matrix& x, const Matrix& bias);
// [B x k] * [B x 1], column scalar broadcast per row.
Matrix mul_colbroadcast(const Matrix& x, const Matrix& s);

Matrix relu(const Matrix& x);
Matrix sigmoid(const Matrix& x);
// Row-wise softmax with max-subtraction; each output row sums to 1.
Matrix softmax_rows(const Matrix& x);

} // namespace licem
