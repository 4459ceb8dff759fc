#pragma once

#include <cstddef>
#include <vector>

namespace fcforge {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    static Matrix identity(std::size_t n);

    Matrix transposed() const;
    Matrix& operator+=(const Matrix& other);
    Matrix& operator*=(double s);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double s, Matrix a);

double max_abs(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);

/// Thin SVD: m = u * diag(s) * v^T with s sorted descending,
/// u is rows x p, v is cols x p, p = min(rows, cols).
struct Svd {
    Matrix u;
    std::vector<double> s;
    Matrix v;
};

/// One-sided Jacobi SVD.
Svd svd(const Matrix& m);

/// Count of singular values above `tol`; a negative `tol` selects
/// max(rows, cols) * eps * s_max.
std::size_t numerical_rank(const std::vector<double>& singular_values, std::size_t rows, std::size_t cols,
                           double tol = -1.0);

}  // namespace fcforge
