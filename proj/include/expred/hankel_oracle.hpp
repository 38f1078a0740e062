#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <expred/con_eigen.hpp>
#include <expred/exponential_sum.hpp>
#include <expred/reduction.hpp>

namespace expred
{

///
/// \brief Outcome of the independent truncated-operator verification of one
/// reduction step.
///
struct VerificationReport
{
    /// The spectral bound the reduction claims to attain.
    double sigma_K = 0.0;

    /// Largest singular value of the truncated perturbation block; approaches
    /// sigma_K from below as the truncation grows.
    double gamma_g_norm_estimate = 0.0;

    /// Numeric rank of the truncated residual block, expected to equal K.
    std::size_t residual_rank = 0;

    /// Whether the pipeline's reduction error stayed within sigma_K.
    bool error_bound_holds = false;

    /// Side length m of the truncated blocks used.
    std::size_t truncation_size = 0;
};

///
/// \brief All m singular values of the leading m x m block of the infinite
/// Hankel matrix of the model, in nonincreasing order.
///
inline Eigen::VectorXd truncated_hankel_singular_values(const ExponentialSum& sum, std::size_t m)
{
    if (m == 0)
    {
        throw std::invalid_argument("truncated_hankel_singular_values: m must be positive");
    }
    if (m < sum.order())
    {
        throw std::invalid_argument("truncated_hankel_singular_values: block size " +
                                    std::to_string(m) + " is below the model order " +
                                    std::to_string(sum.order()));
    }
    const SampleSequence s = sample(sum, 2 * m - 2);
    Eigen::MatrixXcd H(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t k = 0; k < m; ++k)
    {
        for (std::size_t j = 0; j < m; ++j)
        {
            H(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = s.values[k + j];
        }
    }
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(H);
    return svd.singularValues();
}

///
/// \brief Numeric rank of the m x m truncated Hankel block: the number of
/// singular values exceeding tol.
///
/// For any valid model and m at least twice the order, this recovers the
/// number of terms (the finite-rank law for Hankel matrices of exponential
/// sums).
///
inline std::size_t truncated_rank(const ExponentialSum& sum, std::size_t m, double tol)
{
    if (!(tol > 0.0))
    {
        throw std::invalid_argument("truncated_rank: tol must be positive");
    }
    if (m < 2 * sum.order())
    {
        throw std::invalid_argument("truncated_rank: block size " + std::to_string(m) +
                                    " is below twice the model order");
    }
    if (sum.empty())
    {
        return 0;
    }
    const Eigen::VectorXd sv = truncated_hankel_singular_values(sum, m);
    std::size_t rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
    {
        if (sv(i) > tol)
        {
            ++rank;
        }
    }
    return rank;
}

///
/// \brief Taylor coefficients at zero of the Blaschke product
/// prod_j (z - alpha_j) / (1 - conj(alpha_j) z), truncated to n_terms.
///
/// Each factor is expanded as (z - alpha) * sum_k conj(alpha)^k z^k and the
/// factors are combined by sequence convolution.
///
inline std::vector<Complex> blaschke_coefficients(const std::vector<Complex>& alphas,
                                                  std::size_t n_terms)
{
    if (n_terms == 0)
    {
        throw std::invalid_argument("blaschke_coefficients: n_terms must be positive");
    }
    for (const Complex& alpha : alphas)
    {
        if (!(std::abs(alpha) < 1.0))
        {
            throw std::invalid_argument(
                "blaschke_coefficients: factor zero must lie strictly inside the unit disc");
        }
    }
    std::vector<Complex> acc(n_terms, Complex(0.0));
    acc[0] = Complex(1.0);
    std::vector<Complex> factor(n_terms);
    std::vector<Complex> next(n_terms);
    for (const Complex& alpha : alphas)
    {
        // (z - alpha) * (1 + conj(alpha) z + conj(alpha)^2 z^2 + ...)
        const Complex ac = std::conj(alpha);
        Complex geom(1.0);  // conj(alpha)^k
        factor[0] = -alpha;
        for (std::size_t k = 1; k < n_terms; ++k)
        {
            factor[k] = geom - alpha * (geom * ac);
            geom *= ac;
        }
        std::fill(next.begin(), next.end(), Complex(0.0));
        for (std::size_t i = 0; i < n_terms; ++i)
        {
            if (acc[i] == Complex(0.0))
            {
                continue;
            }
            for (std::size_t j = 0; i + j < n_terms; ++j)
            {
                next[i + j] += acc[i] * factor[j];
            }
        }
        acc.swap(next);
    }
    return acc;
}

///
/// \brief Deviation of the truncated Toeplitz matrix of b from an isometry.
///
/// Builds the tall lower-triangular Toeplitz block T with T(i, j) = b_{i-j}
/// using every available coefficient row and the first m columns, and
/// returns the largest entry modulus of T^H T - I.  Blaschke coefficient
/// sequences drive the defect to zero geometrically in the sequence length.
///
inline double toeplitz_isometry_defect(const std::vector<Complex>& b, std::size_t m)
{
    if (m == 0)
    {
        throw std::invalid_argument("toeplitz_isometry_defect: m must be positive");
    }
    if (b.size() < m)
    {
        throw std::invalid_argument("toeplitz_isometry_defect: need at least m coefficients");
    }
    const std::size_t rows = b.size();
    Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(rows),
                                                static_cast<Eigen::Index>(m));
    for (std::size_t j = 0; j < m; ++j)
    {
        for (std::size_t i = j; i < rows; ++i)
        {
            T(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = b[i - j];
        }
    }
    const Eigen::MatrixXcd D =
        T.adjoint() * T - Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(m),
                                                     static_cast<Eigen::Index>(m));
    return D.cwiseAbs().maxCoeff();
}

namespace detail
{

/// In-place forward radix-2 transform, x.size() a power of two.  Twiddles
/// come from one polar evaluation each, keeping phases accurate on long
/// grids.
inline void fft_in_place(std::vector<Complex>& x)
{
    const std::size_t n = x.size();
    for (std::size_t i = 1, j = 0; i < n; ++i)
    {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1)
        {
            j ^= bit;
        }
        j ^= bit;
        if (i < j)
        {
            std::swap(x[i], x[j]);
        }
    }
    std::vector<Complex> twiddle(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k)
    {
        twiddle[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) /
                                         static_cast<double>(n));
    }
    for (std::size_t len = 2; len <= n; len <<= 1)
    {
        const std::size_t stride = n / len;
        for (std::size_t i = 0; i < n; i += len)
        {
            for (std::size_t k = 0; k < len / 2; ++k)
            {
                const Complex u = x[i + k];
                const Complex v = x[i + k + len / 2] * twiddle[k * stride];
                x[i + k] = u + v;
                x[i + k + len / 2] = u - v;
            }
        }
    }
}

/// Leading n_terms Fourier coefficients of the unimodular boundary ratio of
/// the K-th con-eigenpolynomial, computed on a uniform circle grid.
inline std::vector<Complex> g_ratio_coefficients(const ExponentialSum& sum,
                                                 const ConEigenSystem& sys, std::size_t K,
                                                 std::size_t n_terms, std::size_t grid)
{
    const auto& terms = sum.terms();
    std::vector<Complex> vals(grid);
    for (std::size_t g = 0; g < grid; ++g)
    {
        const double t = 2.0 * std::numbers::pi * static_cast<double>(g) /
                         static_cast<double>(grid);
        const Complex e = std::polar(1.0, t);
        Complex phi(0.0);
        for (std::size_t j = 0; j < terms.size(); ++j)
        {
            phi += terms[j].a *
                   std::conj(sys.node_values(static_cast<Eigen::Index>(j),
                                             static_cast<Eigen::Index>(K))) /
                   (Complex(1.0) - terms[j].z * e);
        }
        phi /= sys.sigmas(static_cast<Eigen::Index>(K));
        if (std::abs(phi) < 1e-12)
        {
            throw std::runtime_error(
                "E_DEGENERATE: the con-eigenpolynomial vanishes on the circle grid "
                "(grid index " +
                std::to_string(g) + "); the boundary ratio is undefined");
        }
        vals[g] = phi / std::conj(phi);
    }
    fft_in_place(vals);
    std::vector<Complex> coeffs(n_terms);
    for (std::size_t l = 0; l < n_terms; ++l)
    {
        coeffs[l] = vals[l] / static_cast<double>(grid);
    }
    return coeffs;
}

}  // namespace detail

///
/// \brief Leading n_terms coefficients of the optimal rank-K perturbation
/// sequence: sigma_K times the Fourier coefficients of the unimodular
/// boundary ratio of the K-th con-eigenpolynomial.
///
/// The Hankel matrix generated by this sequence has norm sigma_K and
/// subtracting it from the model's Hankel matrix leaves rank K.  A grid of
/// zero selects the smallest power of two at least 8 * n_terms; the result
/// is certified against aliasing by doubling the grid and requiring
/// agreement to 1e-8.
///
inline std::vector<Complex> g_sequence(const ExponentialSum& sum, std::size_t K,
                                       std::size_t n_terms, std::size_t grid = 0)
{
    if (sum.empty())
    {
        throw std::invalid_argument("g_sequence: empty model");
    }
    if (n_terms == 0)
    {
        throw std::invalid_argument("g_sequence: n_terms must be positive");
    }
    if (K >= sum.order())
    {
        throw std::invalid_argument("g_sequence: K must be below the model order");
    }
    std::size_t g = grid;
    if (g == 0)
    {
        g = 1;
        while (g < 8 * n_terms)
        {
            g <<= 1;
        }
    }
    else if (g < 8 * n_terms || (g & (g - 1)) != 0)
    {
        throw std::invalid_argument(
            "g_sequence: grid must be a power of two at least 8 * n_terms");
    }

    const ConEigenSystem sys = con_eigen(sum);
    if (!sys.simplicity_flags[K])
    {
        throw std::runtime_error(
            "E_SIGMA_CLUSTER: sigma_" + std::to_string(K) +
            " is not isolated from its neighbors; the boundary ratio is not well-defined");
    }

    const std::vector<Complex> coarse = detail::g_ratio_coefficients(sum, sys, K, n_terms, g);
    const std::vector<Complex> fine = detail::g_ratio_coefficients(sum, sys, K, n_terms, 2 * g);
    double dev = 0.0;
    for (std::size_t l = 0; l < n_terms; ++l)
    {
        dev = std::max(dev, std::abs(coarse[l] - fine[l]));
    }
    if (!(dev <= 1e-8))
    {
        throw std::runtime_error(
            "E_TRUNCATION: grid-doubling certificate failed (deviation " + std::to_string(dev) +
            "); increase the grid");
    }

    const double sigma = sys.sigmas(static_cast<Eigen::Index>(K));
    std::vector<Complex> out(n_terms);
    for (std::size_t l = 0; l < n_terms; ++l)
    {
        out[l] = sigma * fine[l];
    }
    return out;
}

///
/// \brief Verifies one reduction step against truncated-operator evidence.
///
/// Assembles the optimal perturbation sequence for index K, forms m x m
/// blocks of its Hankel matrix and of the residual Hankel matrix, and
/// reports the perturbation block norm (expected to approach sigma_K from
/// below), the residual's numeric rank at tolerance 1e-6 times the top
/// singular value (expected K), and whether the pipeline's reduction met its
/// error bound.
///
inline VerificationReport verify_aak(const ExponentialSum& sum, std::size_t K, std::size_t m)
{
    if (sum.empty())
    {
        throw std::invalid_argument("verify_aak: empty model");
    }
    if (K >= sum.order())
    {
        throw std::invalid_argument("verify_aak: K must be below the model order");
    }
    if (m < 4 * sum.order() || m < 10)
    {
        throw std::invalid_argument(
            "verify_aak: truncation must be at least max(4 * order, 10)");
    }

    const ConEigenSystem sys = con_eigen(sum);
    VerificationReport rep;
    rep.sigma_K = sys.sigmas(static_cast<Eigen::Index>(K));
    rep.truncation_size = m;

    const std::vector<Complex> g = g_sequence(sum, K, 2 * m - 1);
    const SampleSequence s = sample(sum, 2 * m - 2);
    Eigen::MatrixXcd G(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    Eigen::MatrixXcd R(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i)
    {
        for (std::size_t j = 0; j < m; ++j)
        {
            G(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = g[i + j];
            R(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                s.values[i + j] - g[i + j];
        }
    }
    Eigen::BDCSVD<Eigen::MatrixXcd> gsvd(G);
    rep.gamma_g_norm_estimate = gsvd.singularValues()(0);

    Eigen::BDCSVD<Eigen::MatrixXcd> rsvd(R);
    const Eigen::VectorXd& rsv = rsvd.singularValues();
    const double rtol = 1e-6 * sys.sigmas(0);
    rep.residual_rank = 0;
    for (Eigen::Index i = 0; i < rsv.size(); ++i)
    {
        if (rsv(i) > rtol)
        {
            ++rep.residual_rank;
        }
    }

    rep.error_bound_holds = reduce_to_K(sum, K).bound_satisfied;
    return rep;
}

}  // namespace expred
