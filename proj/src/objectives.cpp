#include "cpx/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cpx/errors.hpp"

namespace cpx {

QuadraticObjective::QuadraticObjective(Matrix a, Vector b) : a_(std::move(a)), b_(std::move(b)) {
    if (b_.size() != a_.rows()) {
        throw InputError("quadratic objective: b has " + std::to_string(b_.size()) + " entries, A has " +
                         std::to_string(a_.rows()) + " rows");
    }
    if (a_.cols() == 0) throw InputError("quadratic objective: zero-dimensional parameter");
    gram_ = cpx::gram(a_);
    atb_ = cpx::at_b(a_, b_);
    auto [lo, hi] = extreme_eigenvalues(gram_);
    mu_ = std::max(lo, 0.0);
    lip_ = hi;
}

void SparseRows::push_row(ConstSpan dense) {
    if (cols == 0 && row_ptr.size() == 1) cols = dense.size();
    check_dim(dense, cols, "sparse row");
    for (std::size_t j = 0; j < dense.size(); ++j) {
        if (dense[j] != 0.0) {
            index.push_back(static_cast<std::uint32_t>(j));
            value.push_back(dense[j]);
        }
    }
    row_ptr.push_back(index.size());
}

SparseRows SparseRows::from_dense(const Matrix& m) {
    SparseRows s;
    s.cols = m.cols();
    for (std::size_t r = 0; r < m.rows(); ++r) s.push_row(m.row(r));
    return s;
}

Matrix SparseRows::to_dense() const {
    Matrix m(rows(), cols);
    for (std::size_t r = 0; r < rows(); ++r) {
        for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) m(r, index[k]) = value[k];
    }
    return m;
}

namespace {

// Largest eigenvalue of X^T X by power iteration on the sparse rows.
double top_gram_eigenvalue(const SparseRows& x) {
    const std::size_t p = x.cols;
    if (p == 0 || x.rows() == 0) return 0.0;
    Vector v(p, 1.0 / std::sqrt(static_cast<double>(p)));
    Vector w(p);
    double est = 0.0;
    for (int it = 0; it < 2000; ++it) {
        std::fill(w.begin(), w.end(), 0.0);
        for (std::size_t r = 0; r < x.rows(); ++r) {
            double s = 0.0;
            for (std::size_t k = x.row_ptr[r]; k < x.row_ptr[r + 1]; ++k) s += x.value[k] * v[x.index[k]];
            for (std::size_t k = x.row_ptr[r]; k < x.row_ptr[r + 1]; ++k) w[x.index[k]] += s * x.value[k];
        }
        const double nw = norm(w);
        if (nw == 0.0) return 0.0;
        const double next = nw;  // ||X^T X v|| with ||v|| = 1
        for (std::size_t j = 0; j < p; ++j) v[j] = w[j] / nw;
        if (std::abs(next - est) <= 1e-12 * next) return next;
        est = next;
    }
    return est;
}

}  // namespace

SoftmaxObjective::SoftmaxObjective(SparseRows features, std::vector<int> labels, int num_classes,
                                   std::size_t batch_size, double regularizer)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      classes_(num_classes),
      batch_(batch_size),
      reg_(regularizer) {
    if (classes_ < 1) throw InputError("softmax objective: need at least one class");
    if (features_.rows() != labels_.size()) {
        throw InputError("softmax objective: " + std::to_string(features_.rows()) + " feature rows but " +
                         std::to_string(labels_.size()) + " labels");
    }
    if (labels_.empty()) throw InputError("softmax objective: no samples");
    for (int y : labels_) {
        if (y < 0 || y >= classes_) throw InputError("softmax objective: label " + std::to_string(y) + " out of range");
    }
    if (reg_ < 0.0) throw InputError("softmax objective: negative regularizer");
    if (batch_ == 0 || batch_ > labels_.size()) {
        throw ConfigError("softmax objective: batch size " + std::to_string(batch_) + " exceeds " +
                          std::to_string(labels_.size()) + " samples");
    }
    // The per-sample softmax Hessian block diag(p) - p p^T has spectral norm at most 1/2.
    lip_ = 0.5 * top_gram_eigenvalue(features_) / static_cast<double>(labels_.size()) + reg_;
}

SoftmaxObjective::SoftmaxObjective(const Matrix& features, std::vector<int> labels, int num_classes,
                                   std::size_t batch_size, double regularizer)
    : SoftmaxObjective(SparseRows::from_dense(features), std::move(labels), num_classes, batch_size, regularizer) {}

double SoftmaxObjective::loss_grad_range(ConstSpan w, std::size_t first, std::size_t count, Vector* grad) const {
    check_dim(w, dim(), "softmax parameter");
    const std::size_t p = features_.cols;
    const std::size_t n = labels_.size();
    const auto c_count = static_cast<std::size_t>(classes_);
    if (grad != nullptr) grad->assign(dim(), 0.0);
    std::vector<double> score(c_count);
    double loss = 0.0;
    for (std::size_t t = 0; t < count; ++t) {
        const std::size_t r = (first + t) % n;
        const std::size_t b = features_.row_ptr[r];
        const std::size_t e = features_.row_ptr[r + 1];
        for (std::size_t c = 0; c < c_count; ++c) {
            const double* wc = w.data() + c * p;
            double s = 0.0;
            for (std::size_t k = b; k < e; ++k) s += wc[features_.index[k]] * features_.value[k];
            score[c] = s;
        }
        const double top = *std::max_element(score.begin(), score.end());
        double z = 0.0;
        for (std::size_t c = 0; c < c_count; ++c) {
            score[c] = std::exp(score[c] - top);
            z += score[c];
        }
        const auto y = static_cast<std::size_t>(labels_[r]);
        loss += std::log(z) - std::log(score[y]);
        if (grad == nullptr) continue;
        for (std::size_t c = 0; c < c_count; ++c) {
            const double coef = score[c] / z - (c == y ? 1.0 : 0.0);
            if (coef == 0.0) continue;
            double* gc = grad->data() + c * p;
            for (std::size_t k = b; k < e; ++k) gc[features_.index[k]] += coef * features_.value[k];
        }
    }
    const double inv = 1.0 / static_cast<double>(count);
    if (grad != nullptr) scale(inv, *grad);
    return loss * inv;
}

std::size_t dim(const ClientObjective& obj) {
    return std::visit([](const auto& o) { return o.dim(); }, obj);
}

double lipschitz(const ClientObjective& obj) {
    return std::visit([](const auto& o) { return o.lipschitz(); }, obj);
}

double modulus(const ClientObjective& obj) {
    return std::visit([](const auto& o) { return o.modulus(); }, obj);
}

bool is_quadratic(const ClientObjective& obj) { return std::holds_alternative<QuadraticObjective>(obj); }

double value(const ClientObjective& obj, ConstSpan x) {
    check_dim(x, dim(obj), "objective value");
    if (const auto* q = std::get_if<QuadraticObjective>(&obj)) {
        Vector r = matvec(q->a(), x);
        axpy(-1.0, q->b(), r);
        return 0.5 * norm_sq(r);
    }
    const auto& s = std::get<SoftmaxObjective>(obj);
    return s.loss_grad_range(x, 0, s.samples(), nullptr) + 0.5 * s.regularizer() * norm_sq(x);
}

void grad_into(const ClientObjective& obj, ConstSpan x, MutSpan out) {
    check_dim(x, dim(obj), "objective gradient");
    check_dim(out, dim(obj), "objective gradient output");
    if (const auto* q = std::get_if<QuadraticObjective>(&obj)) {
        // A^T (A x - b) through the cached normal equations.
        matvec(q->gram(), x, out);
        axpy(-1.0, q->atb(), out);
        return;
    }
    const auto& s = std::get<SoftmaxObjective>(obj);
    Vector g;
    s.loss_grad_range(x, 0, s.samples(), &g);
    if (s.regularizer() != 0.0) axpy(s.regularizer(), x, g);
    std::copy(g.begin(), g.end(), out.begin());
}

Vector grad(const ClientObjective& obj, ConstSpan x) {
    Vector g(dim(obj));
    grad_into(obj, x, g);
    return g;
}

BatchGrad minibatch_grad(const SoftmaxObjective& obj, ConstSpan x, std::size_t cursor) {
    if (cursor >= obj.samples()) {
        throw InputError("minibatch cursor " + std::to_string(cursor) + " outside " + std::to_string(obj.samples()) +
                         " samples");
    }
    BatchGrad out;
    obj.loss_grad_range(x, cursor, obj.batch_size(), &out.grad);
    if (obj.regularizer() != 0.0) axpy(obj.regularizer(), x, out.grad);
    out.next_cursor = (cursor + obj.batch_size()) % obj.samples();
    return out;
}

Vector prox_quadratic(const QuadraticObjective& obj, double rho, ConstSpan v) {
    if (!(rho > 0.0)) throw InputError("prox_quadratic: rho must be positive");
    check_dim(v, obj.dim(), "prox_quadratic");
    Vector rhs = lincomb(1.0, obj.atb(), rho, v);
    return solve_spd(obj.gram(), rhs, rho);
}

double accuracy(const ValidationSet& set, ConstSpan w) {
    const std::size_t p = set.features.cols;
    const auto c_count = static_cast<std::size_t>(set.num_classes);
    check_dim(w, p * c_count, "accuracy weights");
    if (set.labels.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < set.features.rows(); ++r) {
        std::size_t best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < c_count; ++c) {
            const double* wc = w.data() + c * p;
            double s = 0.0;
            for (std::size_t k = set.features.row_ptr[r]; k < set.features.row_ptr[r + 1]; ++k) {
                s += wc[set.features.index[k]] * set.features.value[k];
            }
            if (s > best_score) {
                best_score = s;
                best = c;
            }
        }
        if (static_cast<int>(best) == set.labels[r]) ++hits;
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(set.labels.size());
}

std::size_t FederatedProblem::dim() const { return clients.empty() ? 0 : cpx::dim(clients.front()); }

bool FederatedProblem::all_quadratic() const {
    return std::all_of(clients.begin(), clients.end(), [](const auto& c) { return is_quadratic(c); });
}

FederatedProblem make_problem(std::vector<ClientObjective> clients) {
    if (clients.empty()) throw InputError("federated problem needs at least one client");
    FederatedProblem p;
    p.clients = std::move(clients);
    const std::size_t d = cpx::dim(p.clients.front());
    p.lipschitz = 0.0;
    p.modulus = std::numeric_limits<double>::infinity();
    for (const auto& c : p.clients) {
        if (cpx::dim(c) != d) throw InputError("federated problem: clients disagree on dimension");
        p.lipschitz = std::max(p.lipschitz, cpx::lipschitz(c));
        p.modulus = std::min(p.modulus, cpx::modulus(c));
    }
    return p;
}

double global_value(const FederatedProblem& p, ConstSpan x) {
    double total = 0.0;
    for (const auto& c : p.clients) total += value(c, x);
    return total;
}

namespace {

Vector global_grad(const FederatedProblem& p, ConstSpan x) {
    Vector g(p.dim(), 0.0);
    Vector gi(p.dim());
    for (const auto& c : p.clients) {
        grad_into(c, x, gi);
        axpy(1.0, gi, g);
    }
    return g;
}

void fill_duals(const FederatedProblem& p, OptimumReport& rep) {
    rep.optimum.f_star = global_value(p, rep.optimum.x_star);
    rep.optimum.lambda_star.clear();
    Vector sum(p.dim(), 0.0);
    for (const auto& c : p.clients) {
        rep.optimum.lambda_star.push_back(grad(c, rep.optimum.x_star));
        axpy(1.0, rep.optimum.lambda_star.back(), sum);
    }
    rep.dual_sum = norm(sum);
    rep.grad_norm = rep.dual_sum;
}

double max_norm(const std::vector<Vector>& vs) {
    double m = 0.0;
    for (const auto& v : vs) m = std::max(m, norm(v));
    return m;
}

}  // namespace

OptimumReport solve_global_optimum(const FederatedProblem& p, double tol, std::size_t max_steps) {
    if (p.clients.empty()) throw InputError("solve_global_optimum: no clients");
    const std::size_t d = p.dim();
    OptimumReport rep;
    if (p.all_quadratic()) {
        Matrix h(d, d);
        Vector rhs(d, 0.0);
        for (const auto& c : p.clients) {
            const auto& q = std::get<QuadraticObjective>(c);
            axpy(1.0, ConstSpan(q.gram().storage()), MutSpan(h.data(), d * d));
            axpy(1.0, q.atb(), rhs);
        }
        try {
            rep.optimum.x_star = solve_spd(h, rhs);
        } catch (const InternalError&) {
            rep.optimum.x_star = solve_psd_min_norm(h, rhs);
        }
        fill_duals(p, rep);
        rep.converged = rep.grad_norm <= tol * (1.0 + max_norm(rep.optimum.lambda_star));
        return rep;
    }
    double lip_sum = 0.0;
    for (const auto& c : p.clients) lip_sum += lipschitz(c);
    const double step = 1.0 / lip_sum;
    Vector x(d, 0.0);
    for (rep.iterations = 0; rep.iterations < max_steps; ++rep.iterations) {
        Vector g = global_grad(p, x);
        if (norm(g) <= tol) break;
        axpy(-step, g, x);
    }
    rep.optimum.x_star = std::move(x);
    fill_duals(p, rep);
    rep.converged = rep.grad_norm <= tol * (1.0 + max_norm(rep.optimum.lambda_star));
    return rep;
}

void certify_optimum(FederatedProblem& p, double tol, std::size_t max_steps) {
    OptimumReport rep = solve_global_optimum(p, tol, max_steps);
    if (!rep.converged) {
        throw ConstraintError("global optimum oracle reached only ||sum grad|| = " + std::to_string(rep.grad_norm));
    }
    p.optimum = std::move(rep.optimum);
}

}  // namespace cpx
