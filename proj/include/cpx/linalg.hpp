#pragma once
// Dense vector/matrix plumbing on top of the dispatched kernels.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace cpx {

using Vector = std::vector<double>;
using ConstSpan = std::span<const double>;
using MutSpan = std::span<double>;

/// Row-major dense matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t cols() const { return cols_; }
    [[nodiscard]] bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    [[nodiscard]] ConstSpan row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    [[nodiscard]] MutSpan row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

    [[nodiscard]] const double* data() const { return data_.data(); }
    double* data() { return data_.data(); }
    [[nodiscard]] const std::vector<double>& storage() const { return data_; }

    static Matrix identity(std::size_t n);

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

double dot(ConstSpan x, ConstSpan y);
double norm(ConstSpan x);
double norm_sq(ConstSpan x);
double max_abs(ConstSpan x);
/// y += a x
void axpy(double a, ConstSpan x, MutSpan y);
void scale(double a, MutSpan x);
/// a x + b y
Vector lincomb(double a, ConstSpan x, double b, ConstSpan y);
Vector sub(ConstSpan x, ConstSpan y);
Vector add(ConstSpan x, ConstSpan y);
Vector scaled(double a, ConstSpan x);

/// y = A x
void matvec(const Matrix& a, ConstSpan x, MutSpan y);
Vector matvec(const Matrix& a, ConstSpan x);
/// y += A^T v
void matvec_t_acc(const Matrix& a, ConstSpan v, MutSpan y);

/// A^T A
Matrix gram(const Matrix& a);
/// A^T b
Vector at_b(const Matrix& a, ConstSpan b);

/// Solves (M + shift I) x = rhs for symmetric positive definite M + shift I.
/// Throws InternalError when the factorization fails.
Vector solve_spd(const Matrix& m, ConstSpan rhs, double shift = 0.0);

/// Minimum-norm solution of M x = rhs for symmetric positive semidefinite M.
Vector solve_psd_min_norm(const Matrix& m, ConstSpan rhs);

/// (smallest, largest) eigenvalue of a symmetric matrix.
std::pair<double, double> extreme_eigenvalues(const Matrix& sym);

void check_dim(ConstSpan x, std::size_t expected, const char* what);

}  // namespace cpx
