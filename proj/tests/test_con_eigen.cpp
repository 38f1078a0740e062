#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>
#include <cstdio>
#include <vector>

#include <Eigen/Dense>

#include <expred/con_eigen.hpp>
#include <expred/exponential_sum.hpp>

#include "support/example_models.hpp"

using expred::ddcomplex;
using expred::ddouble;
using expred::ExponentialSum;

namespace
{

/// Largest relative deviation of the double-double singular values from the
/// frozen references.
template <std::size_t N>
double worst_sigma_rel(const std::vector<ddouble>& got, const double (&ref)[N][2])
{
    double worst = 0.0;
    for (std::size_t l = 0; l < N; ++l)
    {
        const ddouble r = testsupport::dd_ref(ref[l]);
        const double e = std::abs(to_double((got[l] - r) / r));
        worst = std::max(worst, e);
    }
    return worst;
}

/// Residual max_l ||M conj(u_l) - sigma_l u_l||_2 evaluated in double.
double con_eigen_residual(const Eigen::MatrixXcd& M, const expred::ConEigenSystem& sys)
{
    double worst = 0.0;
    for (Eigen::Index l = 0; l < sys.sigmas.size(); ++l)
    {
        const Eigen::VectorXcd u = sys.node_values.col(l);
        const double r = (M * u.conjugate() - sys.sigmas[l] * u).norm();
        worst = std::max(worst, r);
    }
    return worst;
}

} // namespace

TEST_CASE("structured solver reproduces example-1 singular values to quad precision")
{
    const ExponentialSum f = testsupport::example1();
    const auto dd = expred::detail::con_eigen_dd(f);
    REQUIRE(dd.sigmas.size() == 10);
    const double worst = worst_sigma_rel(dd.sigmas, testsupport::kSig1);
    std::printf("example-1 worst sigma rel err (dd): %.3e\n", worst);
    CHECK(worst < 1e-28);
}

TEST_CASE("structured solver reproduces example-2 singular values to quad precision")
{
    const ExponentialSum f = testsupport::example2();
    const auto dd = expred::detail::con_eigen_dd(f);
    REQUIRE(dd.sigmas.size() == 11);
    const double worst = worst_sigma_rel(dd.sigmas, testsupport::kSig2);
    std::printf("example-2 worst sigma rel err (dd): %.3e\n", worst);
    CHECK(worst < 1e-28);
}

TEST_CASE("con-eigen system satisfies its defining equation and ordering")
{
    for (const ExponentialSum& f : {testsupport::example1(), testsupport::example2()})
    {
        const expred::ConEigenSystem sys = expred::con_eigen(f);
        const auto n = static_cast<Eigen::Index>(f.order());
        REQUIRE(sys.sigmas.size() == n);
        REQUIRE(sys.node_values.rows() == n);
        REQUIRE(sys.node_values.cols() == n);
        for (Eigen::Index l = 0; l < n; ++l)
        {
            CHECK(sys.sigmas[l] >= 0.0);
            if (l > 0)
            {
                CHECK(sys.sigmas[l] <= sys.sigmas[l - 1]);
            }
            CHECK(sys.node_values.col(l).norm() == doctest::Approx(1.0).epsilon(1e-12));
        }
        const Eigen::MatrixXcd M = expred::build_system_matrix(f);
        const double res = con_eigen_residual(M, sys);
        std::printf("structural-route residual: %.3e (tol %.3e)\n", res, 1e-8 * sys.sigmas[0]);
        CHECK(res <= 1e-8 * sys.sigmas[0]);
        for (bool flag : sys.simplicity_flags)
        {
            CHECK(flag);
        }
    }
}

TEST_CASE("matrix-route con_eigen agrees with the structured solver")
{
    const ExponentialSum f = testsupport::example1();
    const Eigen::MatrixXcd M = expred::build_system_matrix(f);
    const expred::ConEigenSystem sys = expred::con_eigen(M);
    const expred::ConEigenSystem ref = expred::con_eigen(f);

    // Rounding M to double perturbs each sigma by O(eps * ||M||): compare on
    // an absolute scale relative to sigma_0.
    double worst_abs = 0.0;
    for (Eigen::Index l = 0; l < 10; ++l)
    {
        worst_abs = std::max(worst_abs, std::abs(sys.sigmas[l] - ref.sigmas[l]));
    }
    std::printf("matrix-route sigma abs err / sigma0: %.3e\n", worst_abs / ref.sigmas[0]);
    CHECK(worst_abs <= 1e-15 * ref.sigmas[0]);

    const double res = con_eigen_residual(M, sys);
    std::printf("matrix-route residual: %.3e\n", res);
    CHECK(res <= 1e-8 * sys.sigmas[0]);

    // Con-eigenvectors of simple sigma are unique up to a real sign.
    double worst_vec = 0.0;
    for (Eigen::Index l = 0; l < 10; ++l)
    {
        const Eigen::VectorXcd um = sys.node_values.col(l);
        const Eigen::VectorXcd us = ref.node_values.col(l);
        const double d = std::min((um - us).norm(), (um + us).norm());
        worst_vec = std::max(worst_vec, d);
    }
    std::printf("matrix-route vector deviation: %.3e\n", worst_vec);
    CHECK(worst_vec < 1e-6);
}

TEST_CASE("diagonal matrices have explicit con-eigen systems")
{
    Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(2, 2);
    D(0, 0) = 2.0;
    D(1, 1) = 1.0;
    const expred::ConEigenSystem sys = expred::con_eigen(D);
    CHECK(sys.sigmas[0] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(sys.sigmas[1] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(con_eigen_residual(D, sys) < 1e-14);
    CHECK(std::abs(std::abs(sys.node_values(0, 0)) - 1.0) < 1e-12);
    CHECK(std::abs(sys.node_values(1, 0)) < 1e-12);
}

TEST_CASE("negative diagonal exercises the rotated-vector retry")
{
    // For M = diag(-3) the first candidate M w + sigma conj(w) vanishes
    // identically; the i*w retry must recover u = -i with sigma = 3.
    Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(1, 1);
    D(0, 0) = -3.0;
    const expred::ConEigenSystem sys = expred::con_eigen(D);
    CHECK(sys.sigmas[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(con_eigen_residual(D, sys) < 1e-13);
}

TEST_CASE("matrix whose Gram square has negative spectrum is rejected")
{
    Eigen::MatrixXcd R(2, 2);
    R << 0.0, -1.0, 1.0, 0.0;
    CHECK_THROWS_AS((void)expred::con_eigen(R), std::runtime_error);
}

TEST_CASE("singular values are invariant under simultaneous node rotation")
{
    const ExponentialSum f = testsupport::example1();
    const std::complex<double> phase = std::polar(1.0, 0.3);
    std::vector<expred::Term> rotated;
    for (const auto& t : f.terms())
    {
        rotated.push_back({t.a, t.z * phase});
    }
    const auto a = expred::detail::con_eigen_dd(f);
    const auto b = expred::detail::con_eigen_dd(ExponentialSum(rotated));
    double worst = 0.0;
    for (std::size_t l = 0; l < 10; ++l)
    {
        worst = std::max(worst,
                         std::abs(to_double((a.sigmas[l] - b.sigmas[l]) / a.sigmas[l])));
    }
    // The rotated nodes are themselves rounded to double on input, so
    // invariance holds to input precision, not working precision.
    std::printf("rotation-invariance worst sigma rel: %.3e\n", worst);
    CHECK(worst < 1e-13);
}

TEST_CASE("singular values scale linearly with the weights")
{
    const ExponentialSum f = testsupport::example1();
    // Scale by a power of two so the scaled weights stay exact in double.
    std::vector<expred::Term> scaled;
    for (const auto& t : f.terms())
    {
        scaled.push_back({2.0 * t.a, t.z});
    }
    const auto a = expred::detail::con_eigen_dd(f);
    const auto b = expred::detail::con_eigen_dd(ExponentialSum(scaled));
    for (std::size_t l = 0; l < 10; ++l)
    {
        const ddouble want = ddouble(2.0) * a.sigmas[l];
        CHECK(std::abs(to_double((b.sigmas[l] - want) / want)) < 1e-28);
    }
}

TEST_CASE("single-term system matches the closed form")
{
    const ExponentialSum f({{std::complex<double>(2.0, 0.0), std::complex<double>(0.5, 0.0)}});
    const expred::ConEigenSystem sys = expred::con_eigen(f);
    CHECK(sys.sigmas[0] == doctest::Approx(8.0 / 3.0).epsilon(1e-15));

    const ExponentialSum g({{std::polar(1.7, 1.1), std::complex<double>(0.2, -0.6)}});
    const double want = 1.7 / (1.0 - std::norm(std::complex<double>(0.2, -0.6)));
    const expred::ConEigenSystem s2 = expred::con_eigen(g);
    CHECK(s2.sigmas[0] == doctest::Approx(want).epsilon(1e-15));
}

TEST_CASE("empty and invalid inputs are rejected")
{
    CHECK_THROWS_AS((void)expred::con_eigen(ExponentialSum()),
                    std::invalid_argument);
    Eigen::MatrixXcd empty;
    CHECK_THROWS_AS((void)expred::con_eigen(empty), std::invalid_argument);
    CHECK_THROWS_AS((void)expred::build_system_matrix(ExponentialSum()),
                    std::invalid_argument);
}
