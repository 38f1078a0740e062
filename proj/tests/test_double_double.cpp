#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include <expred/detail/dd_linalg.hpp>
#include <expred/double_double.hpp>

using expred::ddcomplex;
using expred::ddouble;

namespace
{

ddouble ref(double hi, double lo)
{
    return ddouble(hi) + ddouble(lo);
}

double rel_err(const ddouble& x, const ddouble& y)
{
    return std::abs(to_double(x - y)) / std::abs(to_double(y));
}

} // namespace

TEST_CASE("error-free addition keeps units that double drops")
{
    const ddouble big(1e16);
    const ddouble sum = big + ddouble(1.0);
    const ddouble back = sum - big;
    CHECK(back.hi == 1.0);
    CHECK(back.lo == 0.0);
}

TEST_CASE("division reaches quadruple-precision accuracy")
{
    const ddouble third = ddouble(1.0) / ddouble(3.0);
    CHECK(rel_err(third, ref(0.3333333333333333, 1.850371707708594e-17)) < 1e-30);
    // round trip
    const ddouble one = third * ddouble(3.0);
    CHECK(std::abs(to_double(one - ddouble(1.0))) < 1e-31);
}

TEST_CASE("square root reaches quadruple-precision accuracy")
{
    const ddouble r2 = sqrt(ddouble(2.0));
    CHECK(rel_err(r2, ref(1.4142135623730951, -9.667293313452913e-17)) < 1e-30);
    const ddouble mix = sqrt(ddouble(3.0) / ddouble(10.0)) / ddouble(7.0);
    CHECK(rel_err(mix, ref(0.07824607964359516, -3.71027563633138e-19)) < 1e-30);
}

TEST_CASE("complex arithmetic identities")
{
    const ddcomplex a(ddouble(1.0) / ddouble(7.0), sqrt(ddouble(3.0)));
    const ddcomplex b(ddouble(-2.0) / ddouble(3.0), ddouble(5.0) / ddouble(11.0));
    const ddcomplex prod = a * b;
    const ddcomplex back = prod / b;
    CHECK(std::abs(to_complex(back - a)) < 1e-30);

    // |ab| = |a||b|
    const ddouble lhs = abs(prod);
    const ddouble rhs = abs(a) * abs(b);
    CHECK(std::abs(to_double(lhs - rhs)) < 1e-30);

    // conj distributes over products
    const ddcomplex c1 = conj(prod);
    const ddcomplex c2 = conj(a) * conj(b);
    CHECK(std::abs(to_complex(c1 - c2)) < 1e-30);
}

TEST_CASE("principal complex square root")
{
    const ddcomplex m4 = expred::detail::csqrt(ddcomplex(ddouble(-4.0), ddouble(0.0)));
    CHECK(std::abs(to_complex(m4) - std::complex<double>(0.0, 2.0)) < 1e-30);

    const ddcomplex w(ddouble(-3.0), ddouble(-4.0));
    const ddcomplex r = expred::detail::csqrt(w);
    CHECK(std::abs(to_complex(r * r - w)) < 1e-29);
    CHECK(to_double(real(r)) >= 0.0);
}

TEST_CASE("LU solve on an exactly known system")
{
    using namespace expred::detail;
    dd_matrix A(3, 3);
    A(0, 0) = ddcomplex(2.0);
    A(0, 1) = ddcomplex(1.0, 1.0);
    A(0, 2) = ddcomplex(0.0);
    A(1, 0) = ddcomplex(1.0, -1.0);
    A(1, 1) = ddcomplex(3.0);
    A(1, 2) = ddcomplex(0.5);
    A(2, 0) = ddcomplex(0.0);
    A(2, 1) = ddcomplex(0.5);
    A(2, 2) = ddcomplex(1.0);
    dd_vector xexact = {ddcomplex(1.0, 2.0), ddcomplex(-0.5, 0.25), ddcomplex(3.0, -1.0)};
    const dd_vector b = mat_vec(A, xexact);
    const dd_vector x = lu_solve(A, b);
    for (std::size_t i = 0; i < 3; ++i)
    {
        CHECK(std::abs(to_complex(x[i] - xexact[i])) < 1e-29);
    }
}

TEST_CASE("one-sided Jacobi SVD reconstructs and is unitary")
{
    using namespace expred::detail;
    const std::size_t n = 5;
    dd_matrix A(n, n);
    // fixed full-rank complex matrix with graded scales
    for (std::size_t i = 0; i < n; ++i)
    {
        for (std::size_t j = 0; j < n; ++j)
        {
            const double re = std::cos(1.7 * static_cast<double>(i + 2 * j + 1));
            const double im = std::sin(0.9 * static_cast<double>(3 * i + j + 2));
            const double scale = std::pow(10.0, -2.0 * static_cast<double>(j));
            A(i, j) = ddcomplex(re * scale, im * scale);
        }
    }
    std::vector<ddouble> S;
    dd_matrix U;
    dd_matrix V;
    jacobi_svd(A, S, U, V);

    for (std::size_t j = 1; j < n; ++j)
    {
        CHECK(to_double(S[j]) <= to_double(S[j - 1]));
    }
    // reconstruction A = U diag(S) V^H
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
    {
        for (std::size_t j = 0; j < n; ++j)
        {
            ddcomplex acc;
            for (std::size_t k = 0; k < n; ++k)
            {
                acc += U(i, k) * ddcomplex(S[k]) * conj(V(j, k));
            }
            worst = std::max(worst, std::abs(to_complex(acc - A(i, j))));
        }
    }
    CHECK(worst < 1e-28);
    // unitarity of U and V
    for (const dd_matrix* Q : {&U, &V})
    {
        for (std::size_t i = 0; i < n; ++i)
        {
            for (std::size_t j = 0; j < n; ++j)
            {
                ddcomplex acc;
                for (std::size_t k = 0; k < n; ++k)
                {
                    acc += conj((*Q)(k, i)) * (*Q)(k, j);
                }
                const double want = i == j ? 1.0 : 0.0;
                CHECK(std::abs(to_complex(acc) - want) < 1e-28);
            }
        }
    }
}

TEST_CASE("Schur eigendecomposition matches residual and double-precision spectrum")
{
    using namespace expred::detail;
    const std::size_t n = 6;
    dd_matrix A(n, n);
    Eigen::MatrixXcd Ad(n, n);
    for (std::size_t i = 0; i < n; ++i)
    {
        for (std::size_t j = 0; j < n; ++j)
        {
            const double re = std::cos(2.3 * static_cast<double>(i * n + j) + 0.4);
            const double im = std::sin(1.1 * static_cast<double>(i + 4 * j) - 0.7);
            A(i, j) = ddcomplex(re, im);
            Ad(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = {re, im};
        }
    }
    dd_vector lam;
    dd_matrix W;
    eig_decompose(A, lam, W);

    // residuals ||A w - lambda w|| in double-double
    double anorm = 0.0;
    for (std::size_t i = 0; i < n; ++i)
    {
        for (std::size_t j = 0; j < n; ++j)
        {
            anorm = std::max(anorm, std::abs(to_complex(A(i, j))));
        }
    }
    for (std::size_t l = 0; l < n; ++l)
    {
        dd_vector w(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            w[i] = W(i, l);
        }
        const dd_vector aw = mat_vec(A, w);
        double res = 0.0;
        for (std::size_t i = 0; i < n; ++i)
        {
            res = std::max(res, std::abs(to_complex(aw[i] - lam[l] * w[i])));
        }
        CHECK(res < 1e-25 * anorm);
    }

    // spectrum agrees with the double-precision solver to double accuracy
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(Ad, false);
    REQUIRE(es.info() == Eigen::Success);
    std::vector<std::complex<double>> got(n);
    std::vector<std::complex<double>> want(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        got[i] = to_complex(lam[i]);
        want[i] = es.eigenvalues()[static_cast<Eigen::Index>(i)];
    }
    auto by_lex = [](const std::complex<double>& a, const std::complex<double>& b) {
        if (a.real() != b.real())
        {
            return a.real() < b.real();
        }
        return a.imag() < b.imag();
    };
    std::sort(got.begin(), got.end(), by_lex);
    std::sort(want.begin(), want.end(), by_lex);
    for (std::size_t i = 0; i < n; ++i)
    {
        CHECK(std::abs(got[i] - want[i]) < 1e-10);
    }
}

TEST_CASE("eigendecomposition of a triangular matrix returns the diagonal")
{
    using namespace expred::detail;
    dd_matrix A(3, 3);
    A(0, 0) = ddcomplex(4.0, 1.0);
    A(0, 1) = ddcomplex(2.0, -1.0);
    A(0, 2) = ddcomplex(0.5, 0.5);
    A(1, 1) = ddcomplex(-1.0, 0.0);
    A(1, 2) = ddcomplex(1.0, 3.0);
    A(2, 2) = ddcomplex(0.25, -2.0);
    dd_vector lam;
    dd_matrix W;
    eig_decompose(A, lam, W);
    std::vector<std::complex<double>> got;
    for (std::size_t i = 0; i < 3; ++i)
    {
        got.push_back(to_complex(lam[i]));
    }
    auto contains = [&](std::complex<double> w) {
        for (const auto& g : got)
        {
            if (std::abs(g - w) < 1e-28)
            {
                return true;
            }
        }
        return false;
    };
    CHECK(contains({4.0, 1.0}));
    CHECK(contains({-1.0, 0.0}));
    CHECK(contains({0.25, -2.0}));
}
