#include "fcforge/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace fcforge {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    }
    return t;
}

Matrix& Matrix::operator+=(const Matrix& other) {
    if (rows_ != other.rows_ || cols_ != other.cols_) throw std::invalid_argument("matrix shape mismatch in +");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Matrix& Matrix::operator*=(double s) {
    for (auto& v : data_) v *= s;
    return *this;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matrix shape mismatch in *");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t l = 0; l < a.cols(); ++l) {
            const double x = a(i, l);
            if (x == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += x * b(l, j);
        }
    }
    return c;
}

Matrix operator+(Matrix a, const Matrix& b) {
    a += b;
    return a;
}

Matrix operator-(Matrix a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("matrix shape mismatch in -");
    for (std::size_t i = 0; i < a.data().size(); ++i) a.data()[i] -= b.data()[i];
    return a;
}

Matrix operator*(double s, Matrix a) {
    a *= s;
    return a;
}

double max_abs(const Matrix& m) {
    double best = 0.0;
    for (double v : m.data()) best = std::max(best, std::abs(v));
    return best;
}

double max_abs_diff(const Matrix& a, const Matrix& b) { return max_abs(a - b); }

namespace {

// Columns of a tall matrix (rows >= cols) stored contiguously.
Svd jacobi_tall(const Matrix& m) {
    const std::size_t rows = m.rows(), n = m.cols();
    std::vector<std::vector<double>> u(n, std::vector<double>(rows));
    std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < rows; ++i) u[j][i] = m(i, j);
        v[j][j] = 1.0;
    }
    const double eps = std::numeric_limits<double>::epsilon();
    for (int sweep = 0; sweep < 80; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double alpha = 0, beta = 0, gamma = 0;
                for (std::size_t i = 0; i < rows; ++i) {
                    alpha += u[p][i] * u[p][i];
                    beta += u[q][i] * u[q][i];
                    gamma += u[p][i] * u[q][i];
                }
                if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < rows; ++i) {
                    const double up = u[p][i], uq = u[q][i];
                    u[p][i] = c * up - s * uq;
                    u[q][i] = s * up + c * uq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vp = v[p][i], vq = v[q][i];
                    v[p][i] = c * vp - s * vq;
                    v[q][i] = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }

    std::vector<double> sigma(n);
    for (std::size_t j = 0; j < n; ++j) {
        double norm = 0;
        for (double x : u[j]) norm += x * x;
        sigma[j] = std::sqrt(norm);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sigma[a] > sigma[b]; });

    Svd out{Matrix(rows, n), std::vector<double>(n), Matrix(n, n)};
    for (std::size_t jj = 0; jj < n; ++jj) {
        const std::size_t j = order[jj];
        out.s[jj] = sigma[j];
        for (std::size_t i = 0; i < rows; ++i) out.u(i, jj) = sigma[j] > 0 ? u[j][i] / sigma[j] : 0.0;
        for (std::size_t i = 0; i < n; ++i) out.v(i, jj) = v[j][i];
    }
    return out;
}

}  // namespace

Svd svd(const Matrix& m) {
    if (m.rows() >= m.cols()) return jacobi_tall(m);
    Svd t = jacobi_tall(m.transposed());
    return Svd{std::move(t.v), std::move(t.s), std::move(t.u)};
}

std::size_t numerical_rank(const std::vector<double>& singular_values, std::size_t rows, std::size_t cols,
                           double tol) {
    if (singular_values.empty()) return 0;
    const double smax = *std::max_element(singular_values.begin(), singular_values.end());
    if (tol < 0) tol = static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() * smax;
    return static_cast<std::size_t>(
        std::count_if(singular_values.begin(), singular_values.end(), [&](double s) { return s > tol; }));
}

}  // namespace fcforge
