#include <doctest.h>

#include <cmath>

#include "cpx/dataio.hpp"
#include "cpx/errors.hpp"
#include "cpx/objectives.hpp"
#include "cpx/rng.hpp"

using namespace cpx;

namespace {

double rnd(std::uint32_t stream, std::uint64_t i) { return rng::normal(21, stream, rng::Role::misc, i); }

Matrix random_matrix(std::size_t r, std::size_t c, std::uint32_t stream) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < r * c; ++i) m.data()[i] = rnd(stream, i);
    return m;
}

Vector random_vector(std::size_t n, std::uint32_t stream, double s = 1.0) {
    Vector v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = s * rnd(stream, 1000 + i);
    return v;
}

ClientObjective scalar_quad(double a) { return QuadraticObjective(Matrix(1, 1, 1.0), Vector{a}); }

SoftmaxObjective small_softmax(std::size_t n, std::size_t batch, double reg = 0.0) {
    Matrix x(n, 3);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < 3; ++j) x(i, j) = rnd(5, i * 3 + j);
        y[i] = static_cast<int>(i % 4);
    }
    return SoftmaxObjective(x, y, 4, batch, reg);
}

Vector central_fd(const ClientObjective& f, const Vector& x, double h = 1e-6) {
    Vector g(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        Vector a = x, b = x;
        a[j] += h;
        b[j] -= h;
        g[j] = (value(f, a) - value(f, b)) / (2 * h);
    }
    return g;
}

}  // namespace

TEST_CASE("value examples") {
    const ClientObjective id = QuadraticObjective(Matrix::identity(2), Vector{0, 0});
    CHECK(value(id, Vector{3, 4}) == doctest::Approx(12.5));
    CHECK(value(scalar_quad(1.0), Vector{0.0}) == doctest::Approx(0.5));
    const ClientObjective sm = SoftmaxObjective(Matrix(1, 2, 1.0), std::vector<int>{1}, 2, 1);
    CHECK(value(sm, Vector(4, 0.0)) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK_THROWS_AS(value(id, Vector{1, 2, 3}), InputError);
    CHECK_THROWS_AS(grad(id, Vector{1}), InputError);
}

TEST_CASE("gram and atb consistent with A and b") {
    const Matrix a = random_matrix(30, 5, 1);
    const Vector b = random_vector(30, 2);
    const QuadraticObjective q(a, b);
    for (std::size_t j = 0; j < 5; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < 30; ++i) s += a(i, j) * b[i];
        CHECK(std::fabs(q.atb()[j] - s) <= 1e-10 * (1 + std::fabs(s)));
    }
    CHECK(q.lipschitz() >= q.modulus());
    CHECK(q.modulus() > 0.0);
}

TEST_CASE("gradient examples and finite differences") {
    CHECK(grad(scalar_quad(1.0), Vector{0.0})[0] == doctest::Approx(-1.0));
    const ClientObjective id = QuadraticObjective(Matrix::identity(3), Vector(3, 0.0));
    CHECK(grad(id, Vector{1, -2, 3}) == Vector{1, -2, 3});

    const ClientObjective q = QuadraticObjective(random_matrix(8, 5, 3), random_vector(8, 4));
    const ClientObjective s = small_softmax(10, 10, 0.05);
    for (std::uint32_t t = 0; t < 100; ++t) {
        const Vector xq = random_vector(5, 100 + t);
        const Vector gq = grad(q, xq);
        const Vector fq = central_fd(q, xq);
        for (std::size_t j = 0; j < 5; ++j) CHECK(std::fabs(gq[j] - fq[j]) <= 1e-5);
        const Vector xs = random_vector(12, 300 + t);
        const Vector gs = grad(s, xs);
        const Vector fs = central_fd(s, xs);
        for (std::size_t j = 0; j < 12; ++j) CHECK(std::fabs(gs[j] - fs[j]) <= 1e-5);
    }
}

TEST_CASE("strong convexity and smoothness certificates on random pairs") {
    const ClientObjective q = QuadraticObjective(random_matrix(12, 4, 7), random_vector(12, 8));
    const double mu = modulus(q), L = lipschitz(q);
    const ClientObjective s = small_softmax(16, 16, 0.1);
    const double Ls = lipschitz(s), mus = modulus(s);
    double worst = 0.0;
    for (std::uint32_t t = 0; t < 1000; ++t) {
        const Vector x = random_vector(4, 2000 + t, 3.0), y = random_vector(4, 5000 + t, 3.0);
        const Vector gx = grad(q, x), gy = grad(q, y);
        const Vector d = sub(y, x);
        const double sc = value(q, y) - value(q, x) - dot(gx, d) - 0.5 * mu * norm_sq(d);
        const double lip = L * norm(d) - norm(sub(gx, gy));
        worst = std::min({worst, sc / (1 + std::fabs(value(q, y))), lip / (1 + L * norm(d))});

        const Vector u = random_vector(12, 9000 + t, 2.0), w = random_vector(12, 12000 + t, 2.0);
        const Vector gu = grad(s, u), gw = grad(s, w);
        const Vector e = sub(w, u);
        const double sc_s = value(s, w) - value(s, u) - dot(gu, e) - 0.5 * mus * norm_sq(e);
        const double lip_s = Ls * norm(e) - norm(sub(gu, gw));
        worst = std::min({worst, sc_s, lip_s});
    }
    CHECK(worst >= -1e-9);
}

TEST_CASE("softmax construction errors") {
    CHECK_THROWS_AS(small_softmax(6, 7), ConfigError);
    CHECK_THROWS_AS(SoftmaxObjective(Matrix(1, 2, 1.0), std::vector<int>{2}, 2, 1), InputError);
}

TEST_CASE("minibatch gradient cursor walk") {
    const SoftmaxObjective full = small_softmax(6, 6);
    const Vector x = random_vector(12, 40, 0.5);
    const BatchGrad bg = minibatch_grad(full, x, 0);
    CHECK(bg.next_cursor == 0);
    const Vector g = grad(ClientObjective(full), x);
    for (std::size_t j = 0; j < 12; ++j) CHECK(bg.grad[j] == doctest::Approx(g[j]).epsilon(1e-14));

    const SoftmaxObjective two = small_softmax(6, 2, 0.2);
    std::size_t cur = 0;
    std::vector<std::size_t> seen;
    Vector mean(12, 0.0);
    for (int b = 0; b < 3; ++b) {
        seen.push_back(cur);
        const BatchGrad step = minibatch_grad(two, x, cur);
        axpy(1.0 / 3.0, step.grad, mean);
        cur = step.next_cursor;
    }
    CHECK(seen == std::vector<std::size_t>{0, 2, 4});
    CHECK(cur == 0);
    const Vector g2 = grad(ClientObjective(two), x);
    for (std::size_t j = 0; j < 12; ++j) CHECK(std::fabs(mean[j] - g2[j]) <= 1e-10);
    CHECK_THROWS_AS(minibatch_grad(two, x, 6), InputError);
}

TEST_CASE("prox examples") {
    const auto q = std::get<QuadraticObjective>(scalar_quad(3.0));
    CHECK(prox_quadratic(q, 1.0, Vector{0.0})[0] == doctest::Approx(1.5));
    const QuadraticObjective r(random_matrix(10, 3, 9), random_vector(10, 10));
    const Vector xmin = solve_spd(r.gram(), r.atb());
    const Vector p = prox_quadratic(r, 2.0, xmin);
    for (std::size_t j = 0; j < 3; ++j) CHECK(p[j] == doctest::Approx(xmin[j]).epsilon(1e-12));

    // Optimality and a gradient-descent oracle on the prox objective.
    const Vector v = random_vector(3, 11);
    const double rho = 0.7;
    const Vector px = prox_quadratic(r, rho, v);
    Vector res = grad(ClientObjective(r), px);
    axpy(rho, sub(px, v), res);
    CHECK(max_abs(res) <= 1e-9);
    Vector z(3, 0.0);
    const double step = 1.0 / (r.lipschitz() + rho);
    for (int it = 0; it < 200000; ++it) {
        Vector gz = grad(ClientObjective(r), z);
        axpy(rho, sub(z, v), gz);
        if (norm(gz) < 1e-13) break;
        axpy(-step, gz, z);
    }
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::fabs(z[j] - px[j]) <= 1e-8);
}

TEST_CASE("global optimum examples") {
    {
        FederatedProblem p = make_problem({scalar_quad(1.0), scalar_quad(-1.0)});
        const OptimumReport rep = solve_global_optimum(p);
        CHECK(rep.converged);
        CHECK(rep.optimum.x_star[0] == doctest::Approx(0.0));
        CHECK(rep.optimum.f_star == doctest::Approx(1.0));
        CHECK(rep.optimum.lambda_star[0][0] == doctest::Approx(-1.0));
        CHECK(rep.optimum.lambda_star[1][0] == doctest::Approx(1.0));
    }
    {
        FederatedProblem p = make_problem({scalar_quad(2.5)});
        certify_optimum(p);
        CHECK(p.optimum->x_star[0] == doctest::Approx(2.5));
        CHECK(std::fabs(p.optimum->lambda_star[0][0]) <= 1e-12);
    }
    {
        const SyntheticLs ls = gen_synthetic_ls({25, 200, 20, 0.5, 4});
        const auto& opt = *ls.problem.optimum;
        Vector total(20, 0.0);
        for (const auto& c : ls.problem.clients) axpy(1.0, grad(c, opt.x_star), total);
        CHECK(norm(total) <= 1e-8);
        double mx = 0.0;
        Vector lsum(20, 0.0);
        for (std::size_t i = 0; i < 25; ++i) {
            CHECK(norm(sub(grad(ls.problem.clients[i], opt.x_star), opt.lambda_star[i])) <= 1e-8);
            axpy(1.0, opt.lambda_star[i], lsum);
            mx = std::max(mx, norm(opt.lambda_star[i]));
        }
        CHECK(norm(lsum) <= 1e-8 * (1 + mx));
        CHECK(ls.problem.lipschitz >= ls.problem.modulus);
    }
    {
        const FederatedProblem s = gen_synthetic_softmax({});
        REQUIRE(s.optimum);
        Vector total(s.dim(), 0.0);
        for (const auto& c : s.clients) axpy(1.0, grad(c, s.optimum->x_star), total);
        CHECK(norm(total) <= 1e-9);
    }
}

TEST_CASE("accuracy counts arg-max matches") {
    ValidationSet v;
    v.num_classes = 2;
    Matrix f(3, 1);
    f(0, 0) = 1.0;
    f(1, 0) = -1.0;
    f(2, 0) = 2.0;
    v.features = SparseRows::from_dense(f);
    v.labels = {1, 0, 0};
    // class 1 score = x, class 0 score = 0
    CHECK(accuracy(v, Vector{0.0, 1.0}) == doctest::Approx(100.0 * 2.0 / 3.0));
    const Matrix back = v.features.to_dense();
    CHECK(back == f);
}
