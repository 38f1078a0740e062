#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include <expred/detail/dd_linalg.hpp>
#include <expred/double_double.hpp>
#include <expred/exponential_sum.hpp>

namespace expred
{

/// Singular values closer (relative to sigma_0) than this to a neighbour are
/// flagged as clustered; reductions at clustered indices are refused.
inline constexpr double sep_tol = 1e-8;

///
/// \brief All nonzero singular values of the signal's infinite Hankel
/// operator together with the node-evaluation vectors of the matching
/// con-eigenvectors.
///
/// Column l of node_values holds u^(l), the vector of con-eigenvector
/// evaluations at the conjugated nodes; each pair satisfies
/// M conj(u^(l)) = sigma_l u^(l) for the system matrix M.
///
struct ConEigenSystem
{
    Eigen::VectorXd sigmas;                 ///< nonincreasing, length N
    Eigen::MatrixXcd node_values;           ///< N x N, column l = u^(l), unit norm
    std::vector<bool> simplicity_flags;     ///< sigma_l isolated from both neighbours
};

///
/// \brief Cauchy-type system matrix M[r][j] = a_j / (1 - z_j conj(z_r)).
///
/// Its con-eigenvalues are exactly the nonzero singular values of the
/// signal's infinite Hankel operator.
///
/// \throws std::runtime_error if a denominator falls below 1e-13.
///
inline Eigen::MatrixXcd build_system_matrix(const ExponentialSum& sum)
{
    const auto n = static_cast<Eigen::Index>(sum.order());
    if (n == 0)
    {
        throw std::invalid_argument("build_system_matrix: empty sum");
    }
    Eigen::MatrixXcd M(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
    {
        for (Eigen::Index j = 0; j < n; ++j)
        {
            const Complex den =
                1.0 - sum.terms()[static_cast<std::size_t>(j)].z *
                          std::conj(sum.terms()[static_cast<std::size_t>(r)].z);
            if (std::abs(den) < 1e-13)
            {
                throw std::runtime_error("build_system_matrix: degenerate denominator");
            }
            M(r, j) = sum.terms()[static_cast<std::size_t>(j)].a / den;
        }
    }
    return M;
}

namespace detail
{

/// Double-double con-eigen system of the structured problem given by the
/// weights and nodes directly.
struct ConEigenDD
{
    std::vector<ddouble> sigmas; ///< nonincreasing
    dd_matrix node_values;       ///< column l = u^(l), unit norm
};

///
/// \brief Structure-exploiting con-eigen solver in double-double.
///
/// Pipeline: pivoted rank-revealing decomposition of the underlying
/// quasi-Cauchy kernel (Schur-complement updates on the generators keep every
/// entry a small product of exactly representable data, so tiny singular
/// values retain full relative accuracy), one-sided Jacobi SVD of the
/// factor, a second Jacobi pass on the compressed con-symmetric core, and a
/// back-transform of the core vectors to node-evaluation vectors.
///
inline ConEigenDD con_eigen_dd(const std::vector<ddcomplex>& a_in,
                               const std::vector<ddcomplex>& z_in)
{
    const std::size_t n = a_in.size();
    std::vector<ddcomplex> b(n);
    std::vector<ddcomplex> x(n);
    std::vector<ddcomplex> y(n);
    std::vector<ddcomplex> u(n);
    std::vector<ddcomplex> v(n);
    std::vector<ddouble> d(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        b[i] = csqrt(a_in[i]);
        x[i] = ddcomplex(1.0) / z_in[i];
        y[i] = -conj(z_in[i]);
        u[i] = b[i] * x[i];
        v[i] = conj(b[i]);
        d[i] = real(u[i] * v[i] / (x[i] + y[i]));
    }

    // Pivoted rank-revealing decomposition; L rows stay at original indices.
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    dd_matrix L(n, n);
    std::vector<ddouble> dpiv(n);
    for (std::size_t k = 0; k < n; ++k)
    {
        std::size_t p = k;
        for (std::size_t t = k + 1; t < n; ++t)
        {
            if (d[idx[p]] < d[idx[t]])
            {
                p = t;
            }
        }
        std::swap(idx[k], idx[p]);
        const std::size_t ik = idx[k];
        dpiv[k] = d[ik];
        L(ik, k) = ddcomplex(1.0);
        if (dpiv[k].hi <= 0.0)
        {
            continue; // numerically exhausted rank; remaining columns are null
        }
        for (std::size_t t = k + 1; t < n; ++t)
        {
            const std::size_t i = idx[t];
            L(i, k) = (u[i] * v[ik] / (x[i] + y[ik])) / ddcomplex(d[ik]);
        }
        for (std::size_t t = k + 1; t < n; ++t)
        {
            const std::size_t i = idx[t];
            u[i] *= (x[i] - x[ik]) / (x[i] + y[ik]);
            v[i] *= (y[i] - y[ik]) / (x[ik] + y[i]);
            d[i] = real(u[i] * v[i] / (x[i] + y[i]));
        }
    }
    dd_matrix A(n, n);
    for (std::size_t t = 0; t < n; ++t)
    {
        for (std::size_t k = 0; k < n; ++k)
        {
            const ddouble dk = dpiv[k].hi > 0.0 ? dpiv[k] : ddouble();
            A(t, k) = L(idx[t], k) * sqrt(dk);
        }
    }

    std::vector<ddouble> S;
    dd_matrix U;
    dd_matrix V;
    jacobi_svd(A, S, U, V);

    // Compressed core H(i,j) = S_i (U^H conj(U))_{ij} S_j.
    dd_matrix H(n, n);
    for (std::size_t i = 0; i < n; ++i)
    {
        for (std::size_t j = 0; j < n; ++j)
        {
            ddcomplex acc;
            for (std::size_t r = 0; r < n; ++r)
            {
                acc += conj(U(r, i)) * conj(U(r, j));
            }
            H(i, j) = acc * S[i] * S[j];
        }
    }
    std::vector<ddouble> SH;
    dd_matrix UH;
    dd_matrix VH;
    jacobi_svd(H, SH, UH, VH);

    ConEigenDD out;
    out.sigmas = SH;
    out.node_values = dd_matrix(n, n);
    for (std::size_t l = 0; l < n; ++l)
    {
        dd_vector q(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            q[i] = VH(i, l);
        }
        auto build_t = [&](const dd_vector& qq) {
            dd_vector t(n);
            for (std::size_t i = 0; i < n; ++i)
            {
                ddcomplex acc;
                for (std::size_t j = 0; j < n; ++j)
                {
                    acc += H(i, j) * qq[j];
                }
                t[i] = acc + ddcomplex(SH[l]) * conj(qq[i]);
            }
            return t;
        };
        dd_vector t = build_t(q);
        ddouble tn = vec_norm(t);
        if (to_double(tn) < 1e-8)
        {
            for (auto& w : q)
            {
                w = ddcomplex(ddouble(0.0), ddouble(1.0)) * w;
            }
            t = build_t(q);
            tn = vec_norm(t);
        }
        for (auto& w : t)
        {
            w = w / tn;
        }
        dd_vector s = mat_vec(V, t);
        dd_vector xp = mat_vec(A, s);
        dd_vector xfull(n);
        for (std::size_t tt = 0; tt < n; ++tt)
        {
            xfull[idx[tt]] = xp[tt];
        }
        dd_vector uvec(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            uvec[i] = conj(xfull[i] / b[i]);
        }
        const ddouble un = vec_norm(uvec);
        for (std::size_t i = 0; i < n; ++i)
        {
            out.node_values(i, l) = un.hi > 0.0 ? uvec[i] / un : ddcomplex();
        }
    }
    return out;
}

inline ConEigenDD con_eigen_dd(const ExponentialSum& sum)
{
    std::vector<ddcomplex> a;
    std::vector<ddcomplex> z;
    a.reserve(sum.order());
    z.reserve(sum.order());
    for (const auto& t : sum.terms())
    {
        a.emplace_back(t.a);
        z.emplace_back(t.z);
    }
    return con_eigen_dd(a, z);
}

/// Simplicity flags: sigma_l isolated from both neighbours by sep_tol * sigma_0.
inline std::vector<bool> simplicity_from_sigmas(const Eigen::VectorXd& sigmas)
{
    const auto n = sigmas.size();
    std::vector<bool> flags(static_cast<std::size_t>(n), true);
    if (n == 0)
    {
        return flags;
    }
    const double gap = sep_tol * sigmas[0];
    for (Eigen::Index l = 0; l < n; ++l)
    {
        bool simple = true;
        if (l > 0 && sigmas[l - 1] - sigmas[l] <= gap)
        {
            simple = false;
        }
        if (l + 1 < n && sigmas[l] - sigmas[l + 1] <= gap)
        {
            simple = false;
        }
        flags[static_cast<std::size_t>(l)] = simple;
    }
    return flags;
}

} // namespace detail

///
/// \brief Con-eigen system computed directly from the model's weights and
/// nodes.
///
/// Mathematically identical to con_eigen(build_system_matrix(sum)) but the
/// structured double-double pipeline keeps full relative accuracy even for
/// singular values eleven orders of magnitude below sigma_0, which the
/// reduction error bounds require.
///
inline ConEigenSystem con_eigen(const ExponentialSum& sum)
{
    if (sum.empty())
    {
        throw std::invalid_argument("con_eigen: empty sum");
    }
    const detail::ConEigenDD dd = detail::con_eigen_dd(sum);
    const auto n = static_cast<Eigen::Index>(sum.order());
    ConEigenSystem out;
    out.sigmas.resize(n);
    out.node_values.resize(n, n);
    for (Eigen::Index l = 0; l < n; ++l)
    {
        out.sigmas[l] = to_double(dd.sigmas[static_cast<std::size_t>(l)]);
        for (Eigen::Index i = 0; i < n; ++i)
        {
            out.node_values(i, l) = to_complex(
                dd.node_values(static_cast<std::size_t>(i), static_cast<std::size_t>(l)));
        }
    }
    out.simplicity_flags = detail::simplicity_from_sigmas(out.sigmas);
    return out;
}

///
/// \brief Con-eigen system of an explicit system matrix.
///
/// Implements the defining eigen-decomposition of B = conj(M) M.  The
/// spectrum of B is extracted through the doubled operator
/// [[0, M], [conj(M), 0]], whose eigenvalues are the (un-squared) con-eigen
/// values — evaluating the same decomposition at linear instead of quadratic
/// scale, which keeps the small end of graded spectra accurate.  Everything
/// runs in double-double.
///
/// \throws std::runtime_error if an eigenvalue of B has imaginary or negative
/// real part beyond 1e-8 of the largest (the input is not a valid system
/// matrix), or if the con-eigenvector candidates degenerate.
///
inline ConEigenSystem con_eigen(const Eigen::MatrixXcd& M)
{
    const Eigen::Index n = M.rows();
    if (n == 0 || M.cols() != n)
    {
        throw std::invalid_argument("con_eigen: matrix must be square and nonempty");
    }
    if (!M.allFinite())
    {
        throw std::invalid_argument("con_eigen: matrix has non-finite entries");
    }
    const auto nu = static_cast<std::size_t>(n);
    detail::dd_matrix S(2 * nu, 2 * nu);
    for (std::size_t i = 0; i < nu; ++i)
    {
        for (std::size_t j = 0; j < nu; ++j)
        {
            const Complex mij = M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            S(i, nu + j) = ddcomplex(mij);
            S(nu + i, j) = ddcomplex(std::conj(mij));
        }
    }
    detail::dd_vector lam;
    detail::dd_matrix W2;
    detail::eig_decompose(S, lam, W2);

    // Keep the nonnegative half of the +/- paired spectrum.
    std::vector<std::size_t> order(2 * nu);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return to_double(real(lam[b])) < to_double(real(lam[a]));
    });
    order.resize(nu);

    // Validity check on the eigenvalues of B = conj(M) M themselves.
    double max_lam_b = 0.0;
    std::vector<Complex> lam_b(nu);
    for (std::size_t t = 0; t < nu; ++t)
    {
        const ddcomplex lb = lam[order[t]] * lam[order[t]];
        lam_b[t] = to_complex(lb);
        max_lam_b = std::max(max_lam_b, std::abs(lam_b[t]));
    }
    for (std::size_t t = 0; t < nu; ++t)
    {
        if (std::abs(lam_b[t].imag()) > 1e-8 * max_lam_b ||
            lam_b[t].real() < -1e-8 * max_lam_b)
        {
            throw std::runtime_error(
                "con_eigen: eigenvalue of conj(M)*M is not real-nonnegative within "
                "tolerance; input is not a valid system matrix");
        }
    }

    detail::dd_matrix Mdd(nu, nu);
    for (std::size_t i = 0; i < nu; ++i)
    {
        for (std::size_t j = 0; j < nu; ++j)
        {
            Mdd(i, j) = ddcomplex(M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
    }

    ConEigenSystem out;
    out.sigmas.resize(n);
    out.node_values.resize(n, n);
    std::vector<std::pair<ddouble, detail::dd_vector>> pairs(nu);
    for (std::size_t t = 0; t < nu; ++t)
    {
        const ddouble sigma = sqrt(abs(lam[order[t]] * lam[order[t]]));
        detail::dd_vector w(nu);
        for (std::size_t i = 0; i < nu; ++i)
        {
            w[i] = W2(nu + i, order[t]);
        }
        const ddouble wn = detail::vec_norm(w);
        if (wn.hi > 0.0)
        {
            for (auto& c : w)
            {
                c = c / wn;
            }
        }
        auto candidate = [&](const detail::dd_vector& ww) {
            detail::dd_vector uu = detail::mat_vec(Mdd, ww);
            for (std::size_t i = 0; i < nu; ++i)
            {
                uu[i] += ddcomplex(sigma) * conj(ww[i]);
            }
            return uu;
        };
        detail::dd_vector u = candidate(w);
        ddouble un = detail::vec_norm(u);
        if (to_double(un) < 1e-10)
        {
            for (auto& c : w)
            {
                c = ddcomplex(ddouble(0.0), ddouble(1.0)) * c;
            }
            u = candidate(w);
            un = detail::vec_norm(u);
            if (to_double(un) < 1e-10)
            {
                throw std::runtime_error(
                    "con_eigen: con-eigenvector candidate degenerated for both phases");
            }
        }
        for (auto& c : u)
        {
            c = c / un;
        }
        pairs[t] = {sigma, std::move(u)};
    }
    std::sort(pairs.begin(), pairs.end(),
              [](const auto& a, const auto& b) { return b.first < a.first; });
    for (std::size_t t = 0; t < nu; ++t)
    {
        out.sigmas[static_cast<Eigen::Index>(t)] = to_double(pairs[t].first);
        for (std::size_t i = 0; i < nu; ++i)
        {
            out.node_values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) =
                to_complex(pairs[t].second[i]);
        }
    }
    out.simplicity_flags = detail::simplicity_from_sigmas(out.sigmas);
    return out;
}

} // namespace expred
