#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <expred/con_eigen.hpp>
#include <expred/detail/dd_linalg.hpp>
#include <expred/double_double.hpp>
#include <expred/exponential_sum.hpp>

namespace expred
{

/// Roots this far inside the unit circle count as disc zeros.
inline constexpr double disc_tol = 1e-10;
/// Roots within this distance of the unit circle are reported as suspicious
/// when a zero-count check fails.
inline constexpr double disc_margin = 1e-6;

///
/// \brief Outcome of replacing a model by a shorter one at the optimal-error
/// target sigma_K.
///
struct ReductionResult
{
    std::size_t K = 0;                 ///< number of terms kept
    double sigma_K = 0.0;              ///< attained error target
    std::vector<Complex> disc_roots;   ///< the K new nodes, |z| < 1, modulus descending
    ExponentialSum reduced;            ///< the K-term model
    double error_l2 = 0.0;             ///< closed-form l2 distance to the input model
    bool bound_satisfied = false;      ///< error_l2 <= sigma_K * (1 + 1e-6)
    bool unchanged = false;            ///< set by reduce_to_eps when no sigma is below eps
};

///
/// \brief Numerator of the con-eigen rational function.
///
/// For the con-eigenpair (sigma, u) of the model's system matrix, the
/// associated rational function has numerator
///   q(z) = (1/sigma) sum_j a_j conj(u_j) prod_{k != j} (1 - z_k z),
/// a polynomial of degree at most N-1 whose zeros inside the unit disc
/// control the optimal shorter model.
///
/// \throws std::invalid_argument on non-positive sigma or size mismatch
/// \throws std::runtime_error if all coefficients vanish relative to the
///         natural scale (degenerate con-eigenvector)
///
inline ComplexPolynomial numerator_polynomial(const ExponentialSum& sum, double sigma,
                                              const Eigen::VectorXcd& u)
{
    const std::size_t n = sum.order();
    if (n == 0)
    {
        throw std::invalid_argument("numerator_polynomial: empty sum");
    }
    if (!(sigma > 0.0))
    {
        throw std::invalid_argument("numerator_polynomial: sigma must be positive");
    }
    if (static_cast<std::size_t>(u.size()) != n)
    {
        throw std::invalid_argument("numerator_polynomial: vector length must equal the order");
    }
    std::vector<Complex> coeffs(n, Complex(0.0, 0.0));
    double scale = 0.0;
    for (std::size_t j = 0; j < n; ++j)
    {
        const Complex res = sum.terms()[j].a * std::conj(u[static_cast<Eigen::Index>(j)]) / sigma;
        scale += std::abs(res);
        std::vector<Complex> c = {Complex(1.0, 0.0)};
        for (std::size_t k = 0; k < n; ++k)
        {
            if (k == j)
            {
                continue;
            }
            std::vector<Complex> nc(c.size() + 1, Complex(0.0, 0.0));
            for (std::size_t i = 0; i < c.size(); ++i)
            {
                nc[i] += c[i];
                nc[i + 1] -= sum.terms()[k].z * c[i];
            }
            c = std::move(nc);
        }
        for (std::size_t i = 0; i < c.size(); ++i)
        {
            coeffs[i] += res * c[i];
        }
    }
    double peak = 0.0;
    for (const Complex& c : coeffs)
    {
        peak = std::max(peak, std::abs(c));
    }
    if (scale == 0.0 || peak < 1e-14 * scale)
    {
        throw std::runtime_error(
            "E_DEGENERATE: numerator coefficients vanish relative to their scale; "
            "con-eigenvector is degenerate");
    }
    return ComplexPolynomial{coeffs};
}

namespace detail
{

/// In-place Parlett-Reinsch balancing: a diagonal similarity with power-of-two
/// entries that equalizes row and column norms without rounding error.
inline void balance_in_place(Eigen::MatrixXcd& A)
{
    const Eigen::Index n = A.rows();
    constexpr double radix = 2.0;
    bool done = false;
    while (!done)
    {
        done = true;
        for (Eigen::Index i = 0; i < n; ++i)
        {
            double r = 0.0;
            double c = 0.0;
            for (Eigen::Index j = 0; j < n; ++j)
            {
                if (j == i)
                {
                    continue;
                }
                c += std::abs(A(j, i));
                r += std::abs(A(i, j));
            }
            if (c == 0.0 || r == 0.0)
            {
                continue;
            }
            double g = r / radix;
            double f = 1.0;
            const double s = c + r;
            while (c < g)
            {
                f *= radix;
                c *= radix * radix;
            }
            g = r * radix;
            while (c > g)
            {
                f /= radix;
                c /= radix * radix;
            }
            if ((c + r) / f < 0.95 * s)
            {
                done = false;
                A.row(i) /= f;
                A.col(i) *= f;
            }
        }
    }
}

/// Shared formatter for disc zero-count failures.
[[noreturn]] inline void throw_root_count(std::size_t expected, std::size_t found,
                                          const std::vector<Complex>& all_roots)
{
    std::ostringstream os;
    os << "E_ROOT_COUNT: expected " << expected
       << " roots in the open unit disc, found " << found << ";";
    bool any = false;
    for (const Complex& r : all_roots)
    {
        if (std::abs(std::abs(r) - 1.0) <= disc_margin)
        {
            os << (any ? ", " : " near-circle roots:") << " |z| = " << std::abs(r);
            any = true;
        }
    }
    if (!any)
    {
        os << " no near-circle roots";
    }
    throw std::runtime_error(os.str());
}

} // namespace detail

///
/// \brief All roots of a complex polynomial via its balanced companion matrix.
///
/// The polynomial is trimmed of trailing coefficients below 1e-14 of the
/// largest, normalized to monic form, and its companion matrix is balanced
/// by a power-of-two diagonal similarity before the dense eigensolve.
///
/// \throws std::invalid_argument on the zero polynomial or a constant
///
inline std::vector<Complex> polynomial_roots(const ComplexPolynomial& p)
{
    ComplexPolynomial q = p;
    double peak = 0.0;
    for (const Complex& c : q.coeffs)
    {
        peak = std::max(peak, std::abs(c));
    }
    if (peak == 0.0 || q.coeffs.empty())
    {
        throw std::invalid_argument("polynomial_roots: zero polynomial has no root set");
    }
    while (!q.coeffs.empty() && std::abs(q.coeffs.back()) < 1e-14 * peak)
    {
        q.coeffs.pop_back();
    }
    const std::size_t d = q.coeffs.size() - 1;
    if (d == 0)
    {
        throw std::invalid_argument("polynomial_roots: constant polynomial has no roots");
    }
    Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(d),
                                                static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i + 1 < d; ++i)
    {
        C(static_cast<Eigen::Index>(i + 1), static_cast<Eigen::Index>(i)) = 1.0;
    }
    for (std::size_t i = 0; i < d; ++i)
    {
        C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d - 1)) =
            -q.coeffs[i] / q.coeffs[d];
    }
    detail::balance_in_place(C);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(C, false);
    if (es.info() != Eigen::Success)
    {
        throw std::runtime_error("polynomial_roots: companion eigensolve did not converge");
    }
    std::vector<Complex> roots(d);
    for (std::size_t i = 0; i < d; ++i)
    {
        roots[i] = es.eigenvalues()[static_cast<Eigen::Index>(i)];
    }
    return roots;
}

///
/// \brief Filters roots to the open unit disc and enforces an exact count.
///
/// Keeps roots with |z| < 1 - disc_tol sorted by modulus descending.  A count
/// other than K_expected is a hard error: for a simple singular value the
/// structure theorem guarantees exactly K disc zeros, so any mismatch signals
/// numerical degeneracy, and the message lists roots within disc_margin of
/// the circle.
///
inline std::vector<Complex> zeros_in_disc(const std::vector<Complex>& roots,
                                          std::size_t K_expected)
{
    std::vector<Complex> inside;
    for (const Complex& r : roots)
    {
        if (std::abs(r) < 1.0 - disc_tol)
        {
            inside.push_back(r);
        }
    }
    std::sort(inside.begin(), inside.end(),
              [](const Complex& a, const Complex& b) { return std::abs(b) < std::abs(a); });
    if (inside.size() != K_expected)
    {
        detail::throw_root_count(K_expected, inside.size(), roots);
    }
    return inside;
}

namespace detail
{

/// Nodes, weights, and closed-form error of one reduction, in double-double.
struct ReduceCoreDD
{
    std::vector<ddcomplex> nodes;
    std::vector<ddcomplex> weights;
    ddouble error;
};

/// Closed-form l2 energy of sum_i c_i p_i^k over k >= 0, via the pairwise
/// geometric-series identity.
inline ddouble pairwise_energy_dd(const std::vector<ddcomplex>& c,
                                  const std::vector<ddcomplex>& p)
{
    ddcomplex acc;
    for (std::size_t i = 0; i < c.size(); ++i)
    {
        for (std::size_t j = 0; j < c.size(); ++j)
        {
            acc += c[i] * conj(c[j]) / (ddcomplex(1.0) - p[i] * conj(p[j]));
        }
    }
    return abs(acc);
}

///
/// \brief Reduction core for one con-eigenpair, entirely in double-double.
///
/// Works with the conjugate-coefficient numerator
///   q*(t) = (1/sigma) sum_j conj(a_j) u_j prod_{k != j} (1 - conj(z_k) t),
/// whose roots are directly the new nodes (they are the conjugates of the
/// disc zeros of the numerator polynomial q).  Root finding seeds with the
/// double-precision companion eigenvalues and polishes with Newton steps on
/// the product form, which never changes the disc count but restores full
/// double-double accuracy; the weights then come from the normal equations of
/// the infinite-sample least-squares problem (the same closed form fit_l2
/// evaluates in double), and the error from the pairwise-energy identity.
///
inline ReduceCoreDD reduce_core_dd(const std::vector<ddcomplex>& a,
                                   const std::vector<ddcomplex>& z, const ddouble& sigma,
                                   const dd_matrix& us, std::size_t l, std::size_t K_expected)
{
    const std::size_t n = a.size();
    std::vector<ddcomplex> res(n);
    ddouble scale;
    for (std::size_t j = 0; j < n; ++j)
    {
        res[j] = conj(a[j]) * us(j, l) / ddcomplex(sigma);
        scale += abs(res[j]);
    }

    // expand q* to coefficient form
    std::vector<ddcomplex> coeffs(n);
    for (std::size_t j = 0; j < n; ++j)
    {
        std::vector<ddcomplex> c = {ddcomplex(1.0)};
        for (std::size_t k = 0; k < n; ++k)
        {
            if (k == j)
            {
                continue;
            }
            std::vector<ddcomplex> nc(c.size() + 1);
            for (std::size_t i = 0; i < c.size(); ++i)
            {
                nc[i] += c[i];
                nc[i + 1] -= conj(z[k]) * c[i];
            }
            c = std::move(nc);
        }
        for (std::size_t i = 0; i < c.size(); ++i)
        {
            coeffs[i] += res[j] * c[i];
        }
    }
    double peak = 0.0;
    for (const ddcomplex& c : coeffs)
    {
        peak = std::max(peak, std::abs(to_complex(c)));
    }
    if (peak < 1e-14 * to_double(scale))
    {
        throw std::runtime_error(
            "E_DEGENERATE: numerator coefficients vanish relative to their scale; "
            "con-eigenvector is degenerate");
    }

    // double-precision companion seeds
    std::vector<Complex> cd(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        cd[i] = to_complex(coeffs[i]);
    }
    std::size_t deg = n - 1;
    while (deg > 0 && std::abs(cd[deg]) < 1e-13 * peak)
    {
        --deg;
    }
    std::vector<Complex> seeds;
    if (deg >= 1)
    {
        const std::vector<Complex> trimmed(cd.begin(), cd.begin() + static_cast<long>(deg) + 1);
        seeds = polynomial_roots(ComplexPolynomial{trimmed});
    }

    auto qstar = [&](const ddcomplex& t) {
        ddcomplex acc;
        for (std::size_t j = 0; j < n; ++j)
        {
            ddcomplex pr = res[j];
            for (std::size_t k = 0; k < n; ++k)
            {
                if (k != j)
                {
                    pr *= ddcomplex(1.0) - conj(z[k]) * t;
                }
            }
            acc += pr;
        }
        return acc;
    };
    auto qstar_d = [&](const ddcomplex& t) {
        ddcomplex acc;
        for (std::size_t j = 0; j < n; ++j)
        {
            for (std::size_t m = 0; m < n; ++m)
            {
                if (m == j)
                {
                    continue;
                }
                ddcomplex pr = res[j] * (ddcomplex() - conj(z[m]));
                for (std::size_t k = 0; k < n; ++k)
                {
                    if (k != j && k != m)
                    {
                        pr *= ddcomplex(1.0) - conj(z[k]) * t;
                    }
                }
                acc += pr;
            }
        }
        return acc;
    };

    std::vector<ddcomplex> polished;
    for (const Complex& s0 : seeds)
    {
        ddcomplex t(s0);
        for (int it = 0; it < 8; ++it)
        {
            const ddcomplex ft = qstar(t);
            const ddcomplex dt = qstar_d(t);
            if (to_complex(dt) == Complex(0.0, 0.0))
            {
                break;
            }
            t = t - ft / dt;
        }
        polished.push_back(t);
    }

    std::vector<ddcomplex> nodes;
    for (const ddcomplex& t : polished)
    {
        if (to_double(abs(t)) < 1.0 - disc_tol)
        {
            nodes.push_back(t);
        }
    }
    std::sort(nodes.begin(), nodes.end(), [](const ddcomplex& a_, const ddcomplex& b_) {
        return to_double(abs(b_)) < to_double(abs(a_));
    });
    if (nodes.size() != K_expected)
    {
        std::vector<Complex> all;
        for (const ddcomplex& t : polished)
        {
            all.push_back(to_complex(t));
        }
        throw_root_count(K_expected, nodes.size(), all);
    }
    for (std::size_t i = 0; i < nodes.size(); ++i)
    {
        for (std::size_t j = i + 1; j < nodes.size(); ++j)
        {
            if (std::abs(to_complex(nodes[i] - nodes[j])) < node_sep_tol)
            {
                throw std::runtime_error(
                    "E_NODE_COLLISION: two disc roots coincide within the node "
                    "separation tolerance; the reduced model is not well defined");
            }
        }
    }

    ReduceCoreDD out;
    out.nodes = nodes;
    const std::size_t kk = nodes.size();
    if (kk > 0)
    {
        dd_matrix G(kk, kk);
        dd_vector bb(kk);
        for (std::size_t j = 0; j < kk; ++j)
        {
            for (std::size_t jp = 0; jp < kk; ++jp)
            {
                G(j, jp) = ddcomplex(1.0) / (ddcomplex(1.0) - nodes[jp] * conj(nodes[j]));
            }
            ddcomplex acc;
            for (std::size_t v = 0; v < n; ++v)
            {
                acc += a[v] / (ddcomplex(1.0) - z[v] * conj(nodes[j]));
            }
            bb[j] = acc;
        }
        out.weights = lu_solve(G, bb);
    }

    std::vector<ddcomplex> ta(a);
    std::vector<ddcomplex> tz(z);
    for (std::size_t i = 0; i < kk; ++i)
    {
        ta.push_back(ddcomplex() - out.weights[i]);
        tz.push_back(nodes[i]);
    }
    out.error = sqrt(pairwise_energy_dd(ta, tz));
    return out;
}

/// Reduction against an already-computed double-double con-eigen system.
inline ReductionResult reduce_with_system(const ExponentialSum& sum, std::size_t K,
                                          const ConEigenDD& sys)
{
    const std::size_t n = sum.order();
    std::vector<ddcomplex> a;
    std::vector<ddcomplex> z;
    for (const auto& t : sum.terms())
    {
        a.emplace_back(t.a);
        z.emplace_back(t.z);
    }

    ReductionResult out;
    out.K = K;
    out.sigma_K = to_double(sys.sigmas[K]);

    if (K == 0)
    {
        out.error_l2 = to_double(sqrt(pairwise_energy_dd(a, z)));
        out.bound_satisfied = out.error_l2 <= out.sigma_K * (1.0 + 1e-6);
        return out;
    }

    Eigen::VectorXd sig(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
    {
        sig[static_cast<Eigen::Index>(i)] = to_double(sys.sigmas[i]);
    }
    const std::vector<bool> flags = simplicity_from_sigmas(sig);
    if (!flags[K])
    {
        std::ostringstream os;
        os << "E_SIGMA_CLUSTER: sigma_" << K << " = " << sig[static_cast<Eigen::Index>(K)]
           << " is not simple; cluster:";
        const double gap = sep_tol * sig[0];
        for (std::size_t i = 0; i < n; ++i)
        {
            if (std::abs(sig[static_cast<Eigen::Index>(i)] -
                         sig[static_cast<Eigen::Index>(K)]) <= gap)
            {
                os << " sigma_" << i << " = " << sig[static_cast<Eigen::Index>(i)];
            }
        }
        throw std::runtime_error(os.str());
    }

    const ReduceCoreDD core = reduce_core_dd(a, z, sys.sigmas[K], sys.node_values, K, K);

    std::vector<Term> terms;
    for (std::size_t i = 0; i < K; ++i)
    {
        const Complex node = to_complex(core.nodes[i]);
        out.disc_roots.push_back(node);
        terms.push_back({to_complex(core.weights[i]), node});
    }
    out.reduced = ExponentialSum(std::move(terms));
    out.error_l2 = to_double(core.error);
    const ddouble bound = sys.sigmas[K] * (ddouble(1.0) + ddouble(1e-6));
    out.bound_satisfied = !(bound < core.error);
    return out;
}

} // namespace detail

///
/// \brief Optimal-target reduction of a model to exactly K terms.
///
/// Computes the con-eigen system of the model's system matrix, takes the
/// pair at index K, finds the K disc zeros of the associated numerator, and
/// fits the new weights by the closed-form least-squares normal equations.
/// The resulting error satisfies error_l2 <= sigma_K up to roundoff, and
/// bound_satisfied records that check with a 1e-6 relative allowance.
///
/// K = 0 yields the empty model with error_l2 equal to the model's norm.
///
/// \throws std::invalid_argument unless 0 <= K < order
/// \throws std::runtime_error on clustered sigma_K, on a disc zero count
///         other than K, or on coincident disc roots
///
inline ReductionResult reduce_to_K(const ExponentialSum& sum, std::size_t K)
{
    if (sum.empty())
    {
        throw std::invalid_argument("reduce_to_K: empty sum");
    }
    if (K >= sum.order())
    {
        throw std::invalid_argument("reduce_to_K: K must satisfy 0 <= K < order");
    }
    const detail::ConEigenDD sys = detail::con_eigen_dd(sum);
    return detail::reduce_with_system(sum, K, sys);
}

///
/// \brief Reduction to the shortest model with error below eps.
///
/// Picks the smallest K with sigma_K < eps and delegates to reduce_to_K.  If
/// even the smallest singular value is >= eps, returns the original model
/// with the unchanged flag set (K = order, zero error).
///
inline ReductionResult reduce_to_eps(const ExponentialSum& sum, double eps)
{
    if (sum.empty())
    {
        throw std::invalid_argument("reduce_to_eps: empty sum");
    }
    if (!(eps > 0.0))
    {
        throw std::invalid_argument("reduce_to_eps: eps must be positive");
    }
    const detail::ConEigenDD sys = detail::con_eigen_dd(sum);
    const std::size_t n = sum.order();
    std::size_t K = n;
    for (std::size_t i = 0; i < n; ++i)
    {
        if (to_double(sys.sigmas[i]) < eps)
        {
            K = i;
            break;
        }
    }
    if (K == n)
    {
        ReductionResult out;
        out.K = n;
        out.sigma_K = to_double(sys.sigmas[n - 1]);
        out.reduced = sum;
        out.error_l2 = 0.0;
        out.bound_satisfied = true;
        out.unchanged = true;
        return out;
    }
    return detail::reduce_with_system(sum, K, sys);
}

} // namespace expred
