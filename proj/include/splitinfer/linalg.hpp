#ifndef SPLITINFER_LINALG_HPP
#define SPLITINFER_LINALG_HPP

#include <cstddef>
#include <vector>

#include "splitinfer/errors.hpp"

namespace splitinfer {

using Vector = std::vector<double>;

// Dense row-major matrix. All numerics are 64-bit internally; 32-bit
// floats appear only at the wire/file boundary.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    const double* row(std::size_t r) const { return data_.data() + r * cols_; }
    double* row(std::size_t r) { return data_.data() + r * cols_; }

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// row-vector x (1 x r) times W (r x c) -> (1 x c)
Vector matmul(const Vector& x, const Matrix& w);

Matrix matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);

// Solves A X = B by Gaussian elimination with partial pivoting.
// A pivot below 1e-12 * max|A| raises SingularMatrixError.
Matrix solve(const Matrix& a, const Matrix& b);

// Right inverse P (cols x rows) of a full-row-rank W with rows <= cols,
// so that W P = I. Computed as W^T (W W^T)^{-1} through solve(); the
// c x c Gram system keeps the elimination small. Rank deficiency
// surfaces as SingularMatrixError from the solve.
Matrix right_pseudo_inverse(const Matrix& w);

double max_abs(const Matrix& m);
double max_abs(const Vector& v);

// max_{i,j} |(A B - I)_{ij}|, the residual used by pseudo-inverse tests
double identity_residual(const Matrix& a, const Matrix& b);

double norm2(const Vector& v);

// ||a - b|| / ||b||, with ||b|| = 0 mapped to ||a - b||
double relative_l2(const Vector& a, const Vector& b);

} // namespace splitinfer

#endif
