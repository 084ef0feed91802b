#pragma once
// Client objectives f_i: least squares and multinomial softmax regression.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "cpx/linalg.hpp"

namespace cpx {

/// f(x) = 1/2 ||A x - b||^2 with cached normal-equation pieces.
class QuadraticObjective {
public:
    QuadraticObjective(Matrix a, Vector b);

    [[nodiscard]] std::size_t dim() const { return a_.cols(); }
    [[nodiscard]] const Matrix& a() const { return a_; }
    [[nodiscard]] const Vector& b() const { return b_; }
    [[nodiscard]] const Matrix& gram() const { return gram_; }
    [[nodiscard]] const Vector& atb() const { return atb_; }
    /// Extreme eigenvalues of A^T A: (mu, L).
    [[nodiscard]] double modulus() const { return mu_; }
    [[nodiscard]] double lipschitz() const { return lip_; }

private:
    Matrix a_;
    Vector b_;
    Matrix gram_;
    Vector atb_;
    double mu_ = 0.0;
    double lip_ = 0.0;
};

/// Row-compressed feature matrix; pixel data is mostly zeros.
struct SparseRows {
    std::size_t cols = 0;
    std::vector<std::size_t> row_ptr{0};
    std::vector<std::uint32_t> index;
    std::vector<double> value;

    [[nodiscard]] std::size_t rows() const { return row_ptr.size() - 1; }
    void push_row(ConstSpan dense);
    static SparseRows from_dense(const Matrix& m);
    [[nodiscard]] Matrix to_dense() const;
};

/// Mean cross-entropy of a linear softmax classifier plus (reg/2)||W||^2.
/// Parameters are the class-major weight matrix W (C x p) flattened to d = C*p.
class SoftmaxObjective {
public:
    SoftmaxObjective(SparseRows features, std::vector<int> labels, int num_classes, std::size_t batch_size,
                     double regularizer = 0.0);
    SoftmaxObjective(const Matrix& features, std::vector<int> labels, int num_classes, std::size_t batch_size,
                     double regularizer = 0.0);

    [[nodiscard]] std::size_t dim() const { return features_.cols * static_cast<std::size_t>(classes_); }
    [[nodiscard]] std::size_t samples() const { return labels_.size(); }
    [[nodiscard]] std::size_t features() const { return features_.cols; }
    [[nodiscard]] int num_classes() const { return classes_; }
    [[nodiscard]] std::size_t batch_size() const { return batch_; }
    [[nodiscard]] double regularizer() const { return reg_; }
    [[nodiscard]] const SparseRows& rows() const { return features_; }
    [[nodiscard]] const std::vector<int>& labels() const { return labels_; }
    [[nodiscard]] double modulus() const { return reg_; }
    [[nodiscard]] double lipschitz() const { return lip_; }

    /// Loss and gradient summed over samples [first, first+count) with wraparound, then divided by `count`.
    /// The regularizer is not included.
    double loss_grad_range(ConstSpan w, std::size_t first, std::size_t count, Vector* grad) const;

private:
    SparseRows features_;
    std::vector<int> labels_;
    int classes_;
    std::size_t batch_;
    double reg_;
    double lip_ = 0.0;
};

using ClientObjective = std::variant<QuadraticObjective, SoftmaxObjective>;

std::size_t dim(const ClientObjective& obj);
double lipschitz(const ClientObjective& obj);
double modulus(const ClientObjective& obj);
bool is_quadratic(const ClientObjective& obj);

double value(const ClientObjective& obj, ConstSpan x);
Vector grad(const ClientObjective& obj, ConstSpan x);
/// out = grad f(x)
void grad_into(const ClientObjective& obj, ConstSpan x, MutSpan out);

struct BatchGrad {
    Vector grad;
    std::size_t next_cursor;
};
/// Gradient over the batch starting at `cursor` (wraps around), including the regularizer term.
BatchGrad minibatch_grad(const SoftmaxObjective& obj, ConstSpan x, std::size_t cursor);

/// argmin_x f(x) + (rho/2)||x - v||^2.
Vector prox_quadratic(const QuadraticObjective& obj, double rho, ConstSpan v);

/// Held-out samples for classification accuracy.
struct ValidationSet {
    SparseRows features;
    std::vector<int> labels;
    int num_classes = 0;
};
/// Percentage of samples whose arg-max class score equals the label.
double accuracy(const ValidationSet& set, ConstSpan w);

struct Optimum {
    Vector x_star;
    double f_star = 0.0;
    std::vector<Vector> lambda_star;
};

struct FederatedProblem {
    std::vector<ClientObjective> clients;
    double lipschitz = 0.0;
    double modulus = 0.0;
    std::optional<Optimum> optimum;
    std::optional<ValidationSet> validation;

    [[nodiscard]] std::size_t dim() const;
    [[nodiscard]] std::size_t size() const { return clients.size(); }
    [[nodiscard]] bool all_quadratic() const;
};

/// Builds a problem and fills L (max) and mu (min) over clients. No optimum is attached.
FederatedProblem make_problem(std::vector<ClientObjective> clients);

/// F(x) = sum_i f_i(x).
double global_value(const FederatedProblem& p, ConstSpan x);

struct OptimumReport {
    Optimum optimum;
    double grad_norm = 0.0;   // ||sum_i grad f_i(x*)||
    double dual_sum = 0.0;    // ||sum_i lambda*_i||
    bool converged = false;
    std::size_t iterations = 0;
};

/// Exact normal equations for all-quadratic problems, gradient descent otherwise.
OptimumReport solve_global_optimum(const FederatedProblem& p, double tol = 1e-10, std::size_t max_steps = 1000000);

/// Solves and attaches the optimum. Throws ConstraintError when the oracle misses `tol`.
void certify_optimum(FederatedProblem& p, double tol = 1e-10, std::size_t max_steps = 1000000);

}  // namespace cpx
