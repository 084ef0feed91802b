#include "cpx/linalg.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "cpx/errors.hpp"
#include "cpx/kernels.hpp"

namespace cpx {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMajor> as_eigen(const Matrix& m) {
    return Eigen::Map<const RowMajor>(m.data(), static_cast<Eigen::Index>(m.rows()),
                                      static_cast<Eigen::Index>(m.cols()));
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw InputError("matrix storage has " + std::to_string(data_.size()) + " entries, expected " +
                         std::to_string(rows_ * cols_));
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

void check_dim(ConstSpan x, std::size_t expected, const char* what) {
    if (x.size() != expected) {
        throw InputError(std::string(what) + ": dimension " + std::to_string(x.size()) + ", expected " +
                         std::to_string(expected));
    }
}

double dot(ConstSpan x, ConstSpan y) {
    check_dim(y, x.size(), "dot");
    return kernels::active().dot(x.data(), y.data(), x.size());
}

double norm_sq(ConstSpan x) { return kernels::active().dot(x.data(), x.data(), x.size()); }

double norm(ConstSpan x) { return std::sqrt(norm_sq(x)); }

double max_abs(ConstSpan x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
}

void axpy(double a, ConstSpan x, MutSpan y) {
    check_dim(x, y.size(), "axpy");
    kernels::active().axpy(a, x.data(), y.data(), x.size());
}

void scale(double a, MutSpan x) { kernels::active().scale(a, x.data(), x.size()); }

Vector lincomb(double a, ConstSpan x, double b, ConstSpan y) {
    check_dim(y, x.size(), "lincomb");
    Vector out(x.size());
    kernels::active().lincomb(a, x.data(), b, y.data(), out.data(), x.size());
    return out;
}

Vector sub(ConstSpan x, ConstSpan y) { return lincomb(1.0, x, -1.0, y); }
Vector add(ConstSpan x, ConstSpan y) { return lincomb(1.0, x, 1.0, y); }

Vector scaled(double a, ConstSpan x) {
    Vector out(x.begin(), x.end());
    scale(a, out);
    return out;
}

void matvec(const Matrix& a, ConstSpan x, MutSpan y) {
    check_dim(x, a.cols(), "matvec input");
    check_dim(y, a.rows(), "matvec output");
    kernels::active().gemv(a.data(), a.rows(), a.cols(), x.data(), y.data());
}

Vector matvec(const Matrix& a, ConstSpan x) {
    Vector y(a.rows());
    matvec(a, x, y);
    return y;
}

void matvec_t_acc(const Matrix& a, ConstSpan v, MutSpan y) {
    check_dim(v, a.rows(), "matvec_t input");
    check_dim(y, a.cols(), "matvec_t output");
    kernels::active().gemv_t_acc(a.data(), a.rows(), a.cols(), v.data(), y.data());
}

Matrix gram(const Matrix& a) {
    Matrix g(a.cols(), a.cols());
    Eigen::Map<RowMajor> out(g.data(), static_cast<Eigen::Index>(g.rows()), static_cast<Eigen::Index>(g.cols()));
    auto ea = as_eigen(a);
    out.noalias() = ea.transpose() * ea;
    // Exact symmetry; the product above can differ in the last bit across triangles.
    for (std::size_t i = 0; i < g.rows(); ++i) {
        for (std::size_t j = i + 1; j < g.cols(); ++j) g(j, i) = g(i, j);
    }
    return g;
}

Vector at_b(const Matrix& a, ConstSpan b) {
    Vector out(a.cols(), 0.0);
    matvec_t_acc(a, b, out);
    return out;
}

Vector solve_spd(const Matrix& m, ConstSpan rhs, double shift) {
    if (m.rows() != m.cols()) throw InputError("solve_spd: matrix is not square");
    check_dim(rhs, m.rows(), "solve_spd rhs");
    RowMajor sys = as_eigen(m);
    sys.diagonal().array() += shift;
    Eigen::LLT<RowMajor> llt(sys);
    if (llt.info() != Eigen::Success) throw InternalError("solve_spd: system is not positive definite");
    Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    Eigen::VectorXd x = llt.solve(b);
    // One step of iterative refinement keeps the relative residual near machine precision.
    Eigen::VectorXd r = b - sys * x;
    x += llt.solve(r);
    return Vector(x.data(), x.data() + x.size());
}

Vector solve_psd_min_norm(const Matrix& m, ConstSpan rhs) {
    if (m.rows() != m.cols()) throw InputError("solve_psd_min_norm: matrix is not square");
    check_dim(rhs, m.rows(), "solve_psd_min_norm rhs");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(as_eigen(m)));
    if (eig.info() != Eigen::Success) throw InternalError("solve_psd_min_norm: eigendecomposition failed");
    const Eigen::VectorXd& w = eig.eigenvalues();
    const double cutoff = std::max(w.cwiseAbs().maxCoeff(), 1.0) * 1e-12 * static_cast<double>(m.rows());
    Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    Eigen::VectorXd coeff = eig.eigenvectors().transpose() * b;
    for (Eigen::Index i = 0; i < coeff.size(); ++i) coeff[i] = w[i] > cutoff ? coeff[i] / w[i] : 0.0;
    Eigen::VectorXd x = eig.eigenvectors() * coeff;
    return Vector(x.data(), x.data() + x.size());
}

std::pair<double, double> extreme_eigenvalues(const Matrix& sym) {
    if (sym.rows() != sym.cols()) throw InputError("extreme_eigenvalues: matrix is not square");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(as_eigen(sym)), Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw InternalError("extreme_eigenvalues: eigendecomposition failed");
    return {eig.eigenvalues().minCoeff(), eig.eigenvalues().maxCoeff()};
}

}  // namespace cpx
