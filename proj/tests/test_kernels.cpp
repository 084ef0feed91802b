#include <doctest.h>

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "cpx/kernels.hpp"
#include "cpx/rng.hpp"

using namespace cpx;
using kernels::Isa;

namespace {

std::vector<double> draw(std::size_t n, std::uint32_t stream) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = rng::normal(99, stream, rng::Role::misc, i);
    return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// Relative tolerance for reductions: reassociation of n terms.
double red_tol(const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::fabs(x[i] * y[i]);
    return 8.0 * static_cast<double>(x.size()) * 1.2e-16 * (s + 1e-300);
}

}  // namespace

TEST_CASE("scalar table is always available and listed first") {
    const auto isas = kernels::available_isas();
    REQUIRE(!isas.empty());
    CHECK(isas.front() == Isa::scalar);
    CHECK(kernels::table_for(Isa::scalar).isa == Isa::scalar);
    CHECK(kernels::parse_isa("scalar") == Isa::scalar);
    CHECK_THROWS_AS(kernels::parse_isa("sse9"), std::invalid_argument);
}

TEST_CASE("scalar kernels on hand values") {
    const auto& t = kernels::scalar_table();
    const double x[] = {1, 2, 3};
    double y[] = {4, 5, 6};
    CHECK(t.dot(x, y, 3) == 32.0);
    t.axpy(2.0, x, y, 3);
    CHECK(y[0] == 6.0);
    CHECK(y[2] == 12.0);
    t.scale(0.5, y, 3);
    CHECK(y[1] == 4.5);
    double out[3];
    t.lincomb(2.0, x, -1.0, x, out, 3);
    CHECK(out[2] == 3.0);
    const double a[] = {1, 2, 3, 4, 5, 6};  // 2x3
    double r[2];
    t.gemv(a, 2, 3, x, r);
    CHECK(r[0] == 14.0);
    CHECK(r[1] == 32.0);
    double acc[3] = {1, 1, 1};
    const double v[] = {1, -1};
    t.gemv_t_acc(a, 2, 3, v, acc);
    CHECK(acc[0] == -2.0);
    CHECK(acc[2] == -2.0);
}

TEST_CASE("every ISA variant matches the scalar reference") {
    const auto& ref = kernels::scalar_table();
    for (Isa isa : kernels::available_isas()) {
        CAPTURE(kernels::isa_name(isa));
        const auto& t = kernels::table_for(isa);
        // Odd sizes exercise the vector tails.
        for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 17u, 64u, 1001u}) {
            CAPTURE(n);
            const auto x = draw(n, 1);
            const auto y = draw(n, 2);

            const double d_ref = ref.dot(x.data(), y.data(), n);
            const double d = t.dot(x.data(), y.data(), n);
            CHECK(std::fabs(d - d_ref) <= red_tol(x, y));

            auto y1 = y, y2 = y;
            ref.axpy(0.37, x.data(), y1.data(), n);
            t.axpy(0.37, x.data(), y2.data(), n);
            CHECK(bit_equal(y1, y2));

            auto s1 = x, s2 = x;
            ref.scale(-1.9, s1.data(), n);
            t.scale(-1.9, s2.data(), n);
            CHECK(bit_equal(s1, s2));

            std::vector<double> o1(n), o2(n);
            ref.lincomb(0.3, x.data(), -2.1, y.data(), o1.data(), n);
            t.lincomb(0.3, x.data(), -2.1, y.data(), o2.data(), n);
            CHECK(bit_equal(o1, o2));
            // aliasing out == x
            auto a1 = x, a2 = x;
            ref.lincomb(0.3, a1.data(), -2.1, y.data(), a1.data(), n);
            t.lincomb(0.3, a2.data(), -2.1, y.data(), a2.data(), n);
            CHECK(bit_equal(a1, a2));
        }
        for (std::size_t rows : {1u, 5u, 13u}) {
            for (std::size_t cols : {1u, 4u, 9u, 33u}) {
                const auto a = draw(rows * cols, 3);
                const auto x = draw(cols, 4);
                const auto v = draw(rows, 5);
                std::vector<double> r1(rows), r2(rows);
                ref.gemv(a.data(), rows, cols, x.data(), r1.data());
                t.gemv(a.data(), rows, cols, x.data(), r2.data());
                for (std::size_t i = 0; i < rows; ++i) {
                    std::vector<double> row(a.begin() + static_cast<long>(i * cols),
                                            a.begin() + static_cast<long>((i + 1) * cols));
                    CHECK(std::fabs(r1[i] - r2[i]) <= red_tol(row, x));
                }
                std::vector<double> g1(cols, 0.5), g2(cols, 0.5);
                ref.gemv_t_acc(a.data(), rows, cols, v.data(), g1.data());
                t.gemv_t_acc(a.data(), rows, cols, v.data(), g2.data());
                for (std::size_t j = 0; j < cols; ++j) CHECK(std::fabs(g1[j] - g2[j]) <= 1e-13 * (1.0 + std::fabs(g1[j])));
            }
        }
    }
}

TEST_CASE("select switches the active table") {
    const Isa before = kernels::active().isa;
    kernels::select(Isa::scalar);
    CHECK(kernels::active().isa == Isa::scalar);
    kernels::select(before);
    CHECK(kernels::active().isa == before);
}
