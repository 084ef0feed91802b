#include <doctest.h>

#include <cmath>

#include "cpx/errors.hpp"
#include "cpx/linalg.hpp"
#include "cpx/rng.hpp"

using namespace cpx;

namespace {
Matrix random_matrix(std::size_t r, std::size_t c, std::uint32_t stream) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < r * c; ++i) m.data()[i] = rng::normal(11, stream, rng::Role::matrix, i);
    return m;
}
}  // namespace

TEST_CASE("vector helpers") {
    const Vector x{3, 4};
    CHECK(norm(x) == 5.0);
    CHECK(norm_sq(x) == 25.0);
    CHECK(max_abs(Vector{-7, 2}) == 7.0);
    CHECK(sub(x, Vector{1, 1}) == Vector{2, 3});
    CHECK(add(x, Vector{1, 1}) == Vector{4, 5});
    CHECK(scaled(2.0, x) == Vector{6, 8});
    CHECK(lincomb(1.0, x, -1.0, x) == Vector{0, 0});
    CHECK_THROWS_AS(dot(x, Vector{1}), InputError);
}

TEST_CASE("matrix products agree with naive loops") {
    const Matrix a = random_matrix(7, 5, 1);
    Vector x(5), v(7);
    for (std::size_t i = 0; i < 5; ++i) x[i] = 0.1 * static_cast<double>(i) - 0.2;
    for (std::size_t i = 0; i < 7; ++i) v[i] = 1.0 - 0.3 * static_cast<double>(i);
    const Vector y = matvec(a, x);
    Vector aty(5, 0.0);
    matvec_t_acc(a, v, aty);
    const Matrix g = gram(a);
    for (std::size_t i = 0; i < 7; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 5; ++j) s += a(i, j) * x[j];
        CHECK(y[i] == doctest::Approx(s).epsilon(1e-14));
    }
    for (std::size_t j = 0; j < 5; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < 7; ++i) s += a(i, j) * v[i];
        CHECK(aty[j] == doctest::Approx(s).epsilon(1e-14));
        for (std::size_t k = 0; k < 5; ++k) {
            double gk = 0.0;
            for (std::size_t i = 0; i < 7; ++i) gk += a(i, j) * a(i, k);
            CHECK(g(j, k) == doctest::Approx(gk).epsilon(1e-13));
            CHECK(g(j, k) == g(k, j));
        }
    }
    const Vector atb = at_b(a, v);
    for (std::size_t j = 0; j < 5; ++j) CHECK(atb[j] == doctest::Approx(aty[j]).epsilon(1e-13));
}

TEST_CASE("spd solve and eigenvalues") {
    const Matrix g = gram(random_matrix(20, 6, 2));
    Vector rhs(6, 1.0);
    const Vector x = solve_spd(g, rhs, 0.5);
    Vector r = matvec(g, x);
    axpy(0.5, x, r);
    for (std::size_t i = 0; i < 6; ++i) CHECK(r[i] == doctest::Approx(1.0).epsilon(1e-12));
    const auto [lo, hi] = extreme_eigenvalues(g);
    CHECK(lo > 0.0);
    CHECK(hi >= lo);
    // Rayleigh quotient of any vector lies inside [lo, hi].
    const Vector gx = matvec(g, rhs);
    const double rq = dot(rhs, gx) / dot(rhs, rhs);
    CHECK(rq >= lo * (1 - 1e-12));
    CHECK(rq <= hi * (1 + 1e-12));
    Matrix neg(2, 2, 0.0);
    neg(0, 0) = -1.0;
    neg(1, 1) = 1.0;
    CHECK_THROWS_AS(solve_spd(neg, Vector{1, 1}), InternalError);
}

TEST_CASE("min-norm solve on a singular system") {
    Matrix m(2, 2, 1.0);  // [[1,1],[1,1]]
    const Vector x = solve_psd_min_norm(m, Vector{2, 2});
    CHECK(x[0] == doctest::Approx(1.0));
    CHECK(x[1] == doctest::Approx(1.0));
}
