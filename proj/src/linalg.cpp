#include "splitinfer/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace splitinfer {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
        throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                         " != " + std::to_string(rows_) + " x " + std::to_string(cols_));
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        m(i, i) = 1.0;
    return m;
}

Vector matmul(const Vector& x, const Matrix& w) {
    if (x.size() != w.rows())
        throw ShapeError("matmul: vector length " + std::to_string(x.size()) +
                         " != matrix rows " + std::to_string(w.rows()));
    Vector out(w.cols(), 0.0);
    for (std::size_t i = 0; i < w.rows(); ++i) {
        const double xi = x[i];
        if (xi == 0.0)
            continue;
        const double* wrow = w.row(i);
        for (std::size_t j = 0; j < w.cols(); ++j)
            out[j] += xi * wrow[j];
    }
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw ShapeError("matmul: inner dims " + std::to_string(a.cols()) + " vs " +
                         std::to_string(b.rows()));
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* orow = out.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0)
                continue;
            const double* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j)
                orow[j] += aik * brow[j];
        }
    }
    return out;
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            out(j, i) = m(i, j);
    return out;
}

Matrix solve(const Matrix& a, const Matrix& b) {
    if (a.rows() != a.cols())
        throw ShapeError("solve: A is " + std::to_string(a.rows()) + " x " +
                         std::to_string(a.cols()) + ", expected square");
    if (b.rows() != a.rows())
        throw ShapeError("solve: B rows " + std::to_string(b.rows()) + " != A order " +
                         std::to_string(a.rows()));

    const std::size_t n = a.rows();
    Matrix lhs = a;
    Matrix rhs = b;
    const double tol = 1e-12 * std::max(max_abs(a), 1e-300);

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot_row = col;
        double pivot = std::abs(lhs(col, col));
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(lhs(r, col)) > pivot) {
                pivot = std::abs(lhs(r, col));
                pivot_row = r;
            }
        }
        if (pivot < tol)
            throw SingularMatrixError(pivot);
        if (pivot_row != col) {
            for (std::size_t j = 0; j < n; ++j)
                std::swap(lhs(col, j), lhs(pivot_row, j));
            for (std::size_t j = 0; j < rhs.cols(); ++j)
                std::swap(rhs(col, j), rhs(pivot_row, j));
        }
        const double inv_p = 1.0 / lhs(col, col);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col)
                continue;
            const double factor = lhs(r, col) * inv_p;
            if (factor == 0.0)
                continue;
            for (std::size_t j = col; j < n; ++j)
                lhs(r, j) -= factor * lhs(col, j);
            for (std::size_t j = 0; j < rhs.cols(); ++j)
                rhs(r, j) -= factor * rhs(col, j);
        }
    }
    for (std::size_t r = 0; r < n; ++r) {
        const double inv_p = 1.0 / lhs(r, r);
        for (std::size_t j = 0; j < rhs.cols(); ++j)
            rhs(r, j) *= inv_p;
    }
    return rhs;
}

Matrix right_pseudo_inverse(const Matrix& w) {
    if (w.rows() > w.cols())
        throw ShapeError("right_pseudo_inverse: rows " + std::to_string(w.rows()) +
                         " > cols " + std::to_string(w.cols()) +
                         "; no right inverse exists");
    const Matrix wt = transpose(w);
    const Matrix gram = matmul(w, wt); // rows x rows
    const Matrix gram_inv = solve(gram, Matrix::identity(w.rows()));
    return matmul(wt, gram_inv); // cols x rows
}

double max_abs(const Matrix& m) {
    double best = 0.0;
    for (double v : m.data())
        best = std::max(best, std::abs(v));
    return best;
}

double max_abs(const Vector& v) {
    double best = 0.0;
    for (double x : v)
        best = std::max(best, std::abs(x));
    return best;
}

double identity_residual(const Matrix& a, const Matrix& b) {
    Matrix prod = matmul(a, b);
    double worst = 0.0;
    for (std::size_t i = 0; i < prod.rows(); ++i)
        for (std::size_t j = 0; j < prod.cols(); ++j) {
            const double want = (i == j) ? 1.0 : 0.0;
            worst = std::max(worst, std::abs(prod(i, j) - want));
        }
    return worst;
}

double norm2(const Vector& v) {
    double s = 0.0;
    for (double x : v)
        s += x * x;
    return std::sqrt(s);
}

double relative_l2(const Vector& a, const Vector& b) {
    if (a.size() != b.size())
        throw ShapeError("relative_l2: lengths differ");
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        diff += d * d;
    }
    const double ref = norm2(b);
    return ref == 0.0 ? std::sqrt(diff) : std::sqrt(diff) / ref;
}

} // namespace splitinfer
