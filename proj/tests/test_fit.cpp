#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <string>
#include <vector>

#include <expred/con_eigen.hpp>
#include <expred/fit.hpp>
#include <expred/reduction.hpp>

#include "support/example_models.hpp"

using expred::Complex;
using expred::ExponentialSum;

namespace
{

const ExponentialSum& one_half()
{
    static const ExponentialSum f({{Complex(1.0, 0.0), Complex(0.5, 0.0)}});
    return f;
}

} // namespace

TEST_CASE("exact single-node fit recovers the weight with zero objective")
{
    const expred::FitReport r = expred::fit_l2(one_half(), {Complex(0.5, 0.0)});
    REQUIRE(r.weights.size() == 1);
    CHECK(std::abs(r.weights[0] - Complex(1.0, 0.0)) < 1e-14);
    CHECK(r.objective < 1e-12);
    CHECK(r.method == expred::FitMethod::l2_closed_form);
    CHECK_FALSE(r.truncation_M.has_value());
}

TEST_CASE("off-node single fit matches the hand computation")
{
    const expred::FitReport r = expred::fit_l2(one_half(), {Complex(0.3, 0.0)});
    const double a_want = (1.0 / 0.85) / (1.0 / 0.91); // 0.91/0.85
    REQUIRE(r.weights.size() == 1);
    CHECK(std::abs(r.weights[0] - Complex(a_want, 0.0)) < 1e-14);
    const double obj_want = std::sqrt(4.0 / 3.0 - a_want * a_want / 0.91);
    CHECK(r.objective == doctest::Approx(obj_want).epsilon(1e-12));
}

TEST_CASE("example-2 single-node fit reproduces the reference weight")
{
    const ExponentialSum f = testsupport::example2();
    const expred::ReductionResult red = expred::reduce_to_K(f, 1);
    const expred::FitReport r = expred::fit_l2(f, red.disc_roots);
    REQUIRE(r.weights.size() == 1);
    const double node_ref = to_double(testsupport::dd_ref(testsupport::kNode2n1[0]));
    const double wt_ref = to_double(testsupport::dd_ref(testsupport::kWt2n1[0]));
    CHECK(std::abs(red.disc_roots[0] - Complex(node_ref, 0.0)) < 1e-13);
    CHECK(std::abs(r.weights[0] - Complex(wt_ref, 0.0)) < 1e-11);
    // four-significant-digit agreement with the published rounded pair
    CHECK(std::abs(red.disc_roots[0].real() - 0.9804) < 1e-4);
    CHECK(std::abs(r.weights[0].real() - 0.2420) < 1e-4);
}

TEST_CASE("l2 fit weights match the reduction weights on example-1 K=5")
{
    const ExponentialSum f = testsupport::example1();
    const expred::ReductionResult red = expred::reduce_to_K(f, 5);
    const expred::FitReport r = expred::fit_l2(f, red.disc_roots);
    REQUIRE(r.weights.size() == 5);
    double worst = 0.0;
    for (std::size_t i = 0; i < 5; ++i)
    {
        worst = std::max(worst, std::abs(r.weights[i] - red.reduced.terms()[i].a));
    }
    std::printf("fit_l2 vs reduction weight dev: %.3e\n", worst);
    CHECK(worst < 1e-9);
    CHECK(std::abs(r.objective - red.error_l2) / red.error_l2 < 1e-3);
}

TEST_CASE("l2 residual is orthogonal to every fitted sequence")
{
    const ExponentialSum f = testsupport::example1();
    const expred::ReductionResult red = expred::reduce_to_K(f, 4);
    const expred::FitReport r = expred::fit_l2(f, red.disc_roots);
    const double fnorm = expred::l2_norm(f);
    // <f - f~, e_j> = b_j - (G a~)_j in closed form
    for (std::size_t j = 0; j < red.disc_roots.size(); ++j)
    {
        const Complex zj = red.disc_roots[j];
        Complex ip(0.0);
        for (const auto& t : f.terms())
        {
            ip += t.a / (1.0 - t.z * std::conj(zj));
        }
        for (std::size_t jp = 0; jp < red.disc_roots.size(); ++jp)
        {
            ip -= r.weights[jp] / (1.0 - red.disc_roots[jp] * std::conj(zj));
        }
        CHECK(std::abs(ip) <= 1e-8 * fnorm);
    }
}

TEST_CASE("objective squared equals the quadratic form within 1e-10 relative")
{
    const ExponentialSum f = testsupport::example1();
    for (std::size_t K : {2, 4})
    {
        const expred::ReductionResult red = expred::reduce_to_K(f, K);
        const expred::FitReport r = expred::fit_l2(f, red.disc_roots);
        // ||f||^2 - Re(a~^H b)
        Complex quad(0.0);
        for (std::size_t j = 0; j < red.disc_roots.size(); ++j)
        {
            Complex bj(0.0);
            for (const auto& t : f.terms())
            {
                bj += t.a / (1.0 - t.z * std::conj(red.disc_roots[j]));
            }
            quad += std::conj(r.weights[j]) * bj;
        }
        const double fsq = expred::l2_norm(f) * expred::l2_norm(f);
        const double closed = fsq - quad.real();
        CHECK(closed >= 0.0);
        CHECK(std::abs(r.objective * r.objective - closed) <= 1e-10 * fsq);
    }
}

TEST_CASE("fitting on the original nodes returns the original weights")
{
    // Well-separated nodes keep the Gram system benign, so both solvers
    // must reproduce the generating weights essentially exactly.
    const ExponentialSum f({{Complex(1.2, 0.0), Complex(0.7, 0.0)},
                            {Complex(-0.4, 0.3), Complex(-0.35, 0.55)},
                            {Complex(0.0, 0.9), Complex(0.1, -0.6)},
                            {Complex(0.8, -0.1), Complex(-0.75, 0.0)}});
    std::vector<Complex> nodes;
    for (const auto& t : f.terms())
    {
        nodes.push_back(t.z);
    }
    const expred::FitReport r2 = expred::fit_l2(f, nodes);
    const expred::FitReport r1 = expred::fit_l1(f, nodes, 1e-10);
    for (std::size_t j = 0; j < nodes.size(); ++j)
    {
        CHECK(std::abs(r2.weights[j] - f.terms()[j].a) < 1e-12);
        CHECK(std::abs(r1.weights[j] - f.terms()[j].a) < 1e-8);
    }
    CHECK(r2.objective <= 1e-10);
    CHECK(r1.objective <= 1e-8);
}

TEST_CASE("exact-node recovery on a clustered model degrades only with the Gram condition")
{
    // With ten nodes crowding the same disc region the normal equations are
    // genuinely ill-conditioned; weight recovery can only be accurate to
    // roughly condition * machine epsilon.  The report must expose the
    // condition estimate that explains the loss.
    const ExponentialSum f = testsupport::example1();
    std::vector<Complex> nodes;
    for (const auto& t : f.terms())
    {
        nodes.push_back(t.z);
    }
    const expred::FitReport r2 = expred::fit_l2(f, nodes);
    REQUIRE(r2.condition_estimate > 1e6);  // genuinely hard system
    const double weight_tol_scaled = r2.condition_estimate * 1e-14;
    double worst = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j)
    {
        worst = std::max(worst, std::abs(r2.weights[j] - f.terms()[j].a));
    }
    std::printf("clustered exact-node recovery: worst dev %.3e, cond %.3e\n",
                worst, r2.condition_estimate);
    CHECK(worst < weight_tol_scaled);
    // The objective is a residual norm, not a weight-space error: it stays
    // near machine precision even when the weights wobble.
    CHECK(r2.objective <= 1e-6);
}

TEST_CASE("l1 fit on the exact node is exact")
{
    const expred::FitReport r = expred::fit_l1(one_half(), {Complex(0.5, 0.0)}, 1e-10);
    REQUIRE(r.weights.size() == 1);
    CHECK(std::abs(r.weights[0] - Complex(1.0, 0.0)) < 1e-12);
    CHECK(r.objective <= 1e-10);
    CHECK(r.method == expred::FitMethod::l1_truncated);
    CHECK(r.truncation_M.has_value());
}

TEST_CASE("l1 fit with no nodes reports the truncated l1 norm")
{
    const expred::FitReport r = expred::fit_l1(one_half(), {}, 1e-9);
    const double want = expred::l1_norm_truncated(one_half(), 1e-9);
    CHECK(r.objective == doctest::Approx(want).epsilon(1e-15));
    CHECK(r.weights.empty());
}

TEST_CASE("l1 objective never exceeds the l1 cost of the l2 solution")
{
    const ExponentialSum f = testsupport::example1();
    for (std::size_t K : {2, 5})
    {
        const expred::ReductionResult red = expred::reduce_to_K(f, K);
        const double tol = 1e-9;
        const expred::FitReport r1 = expred::fit_l1(f, red.disc_roots, tol);

        // l1 cost of the l2-optimal weights on the same grid
        const expred::FitReport r2 = expred::fit_l2(f, red.disc_roots);
        Eigen::VectorXcd w2(static_cast<Eigen::Index>(K));
        for (std::size_t j = 0; j < K; ++j)
        {
            w2(static_cast<Eigen::Index>(j)) = r2.weights[j];
        }
        const std::size_t M = *r1.truncation_M;
        const expred::SampleSequence fs = expred::sample(f, M);
        double cost2 = 0.0;
        for (std::size_t ksm = 0; ksm <= M; ++ksm)
        {
            Complex v = fs.values[ksm];
            for (std::size_t j = 0; j < K; ++j)
            {
                v -= r2.weights[j] * expred::detail::ipow(red.disc_roots[j], ksm);
            }
            cost2 += std::abs(v);
        }
        CHECK(r1.objective <= cost2 + tol);

        // and the sequence-l1 error of any K-term candidate is at least sigma_K
        CHECK(r1.objective >= red.sigma_K * (1.0 - 1e-9));
        std::printf("l1 objective at K=%zu: %.6e (sigma_K %.6e, ratio %.4f)\n", K,
                    r1.objective, red.sigma_K, r1.objective / red.sigma_K);
    }
}

TEST_CASE("clustered nodes are refused by the condition cap")
{
    const ExponentialSum f = testsupport::example1();
    try
    {
        (void)expred::fit_l2(f, {Complex(0.9, 0.0), Complex(0.9 + 1.1e-10, 0.0)});
        FAIL("expected a conditioning error");
    }
    catch (const std::runtime_error& e)
    {
        CHECK(std::string(e.what()).find("E_ILL_COND") != std::string::npos);
    }
}

TEST_CASE("fit input validation")
{
    const ExponentialSum f = one_half();
    CHECK_THROWS_AS((void)expred::fit_l2(f, {Complex(1.0, 0.0)}), std::invalid_argument);
    CHECK_THROWS_AS((void)expred::fit_l2(f, {Complex(1.5, 0.0)}), std::invalid_argument);
    CHECK_THROWS_AS(
        (void)expred::fit_l2(f, {Complex(0.5, 0.0), Complex(0.5, 0.0)}),
        std::invalid_argument);
    CHECK_THROWS_AS((void)expred::fit_l1(f, {Complex(0.5, 0.0)}, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)expred::fit_l1(f, {Complex(0.5, 0.0)}, -1e-3),
                    std::invalid_argument);
}

TEST_CASE("empty-node l2 fit reports the model norm")
{
    const expred::FitReport r = expred::fit_l2(one_half(), {});
    CHECK(r.weights.empty());
    CHECK(r.objective == doctest::Approx(2.0 / std::sqrt(3.0)).epsilon(1e-14));
}
