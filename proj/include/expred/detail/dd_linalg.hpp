#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <expred/double_double.hpp>

namespace expred
{
namespace detail
{

///
/// \brief Minimal dense row-major matrix for the double-double kernels.
///
/// Eigen handles all binary64 linear algebra in this library; this container
/// exists only because the compensated scalar types are not Eigen scalars and
/// the handful of high-precision kernels below are hand-rolled anyway.
///
template <typename Scalar>
class DenseMatrix
{
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols)
        : m_rows(rows), m_cols(cols), m_data(rows * cols)
    {
    }

    Scalar& operator()(std::size_t i, std::size_t j) { return m_data[i * m_cols + j]; }
    const Scalar& operator()(std::size_t i, std::size_t j) const { return m_data[i * m_cols + j]; }

    std::size_t rows() const { return m_rows; }
    std::size_t cols() const { return m_cols; }

    static DenseMatrix identity(std::size_t n)
    {
        DenseMatrix I(n, n);
        for (std::size_t i = 0; i < n; ++i)
        {
            I(i, i) = Scalar(1.0);
        }
        return I;
    }

private:
    std::size_t m_rows{0};
    std::size_t m_cols{0};
    std::vector<Scalar> m_data;
};

using dd_matrix = DenseMatrix<ddcomplex>;
using dd_vector = std::vector<ddcomplex>;

inline ddouble vec_norm(const dd_vector& v)
{
    ddouble acc;
    for (const auto& x : v)
    {
        acc += norm_sqr(x);
    }
    return sqrt(acc);
}

inline dd_vector mat_vec(const dd_matrix& A, const dd_vector& x)
{
    dd_vector y(A.rows());
    for (std::size_t i = 0; i < A.rows(); ++i)
    {
        ddcomplex acc;
        for (std::size_t j = 0; j < A.cols(); ++j)
        {
            acc += A(i, j) * x[j];
        }
        y[i] = acc;
    }
    return y;
}

/// Principal square root of a double-double complex number.
inline ddcomplex csqrt(const ddcomplex& z)
{
    const ddouble r = abs(z);
    if (r.hi == 0.0)
    {
        return {};
    }
    if (z.re.hi >= 0.0)
    {
        const ddouble u = sqrt((r + z.re) * 0.5);
        return {u, z.im / (u * 2.0)};
    }
    ddouble v = sqrt((r - z.re) * 0.5);
    if (z.im.hi < 0.0 || (z.im.hi == 0.0 && z.im.lo < 0.0))
    {
        v = -v;
    }
    return {z.im / (v * 2.0), v};
}

///
/// \brief Solve A x = b by LU with partial pivoting (in double-double).
///
/// Throws std::runtime_error when a pivot degenerates to zero.
///
inline dd_vector lu_solve(dd_matrix A, dd_vector b)
{
    const std::size_t n = A.rows();
    if (A.cols() != n || b.size() != n)
    {
        throw std::invalid_argument("lu_solve: dimension mismatch");
    }
    for (std::size_t k = 0; k < n; ++k)
    {
        std::size_t piv = k;
        ddouble best = norm_sqr(A(k, k));
        for (std::size_t i = k + 1; i < n; ++i)
        {
            const ddouble cand = norm_sqr(A(i, k));
            if (best < cand)
            {
                best = cand;
                piv = i;
            }
        }
        if (best.hi == 0.0)
        {
            throw std::runtime_error("lu_solve: singular matrix");
        }
        if (piv != k)
        {
            for (std::size_t j = 0; j < n; ++j)
            {
                std::swap(A(k, j), A(piv, j));
            }
            std::swap(b[k], b[piv]);
        }
        for (std::size_t i = k + 1; i < n; ++i)
        {
            const ddcomplex f = A(i, k) / A(k, k);
            for (std::size_t j = k + 1; j < n; ++j)
            {
                A(i, j) -= f * A(k, j);
            }
            b[i] -= f * b[k];
        }
    }
    dd_vector x(n);
    for (std::size_t ii = n; ii-- > 0;)
    {
        ddcomplex acc = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j)
        {
            acc -= A(ii, j) * x[j];
        }
        x[ii] = acc / A(ii, ii);
    }
    return x;
}

///
/// \brief One-sided Jacobi SVD of a square matrix, A = U diag(sigma) V^H.
///
/// Columns of A are orthogonalized by complex plane rotations; singular
/// values come out with high relative accuracy, which is what the graded
/// spectra in this library require.  Results are sorted nonincreasing.
///
inline void jacobi_svd(const dd_matrix& A_in, std::vector<ddouble>& sigma, dd_matrix& U,
                       dd_matrix& V)
{
    const std::size_t n = A_in.rows();
    dd_matrix A = A_in;
    V = dd_matrix::identity(n);
    const double tol = 1e-31;
    for (int sweep = 0; sweep < 120; ++sweep)
    {
        double off = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p)
        {
            for (std::size_t q = p + 1; q < n; ++q)
            {
                ddouble alpha;
                ddouble beta;
                ddcomplex gam;
                for (std::size_t i = 0; i < n; ++i)
                {
                    alpha += norm_sqr(A(i, p));
                    beta += norm_sqr(A(i, q));
                    gam += conj(A(i, p)) * A(i, q);
                }
                if (alpha.hi == 0.0 || beta.hi == 0.0)
                {
                    continue;
                }
                const ddouble gabs = abs(gam);
                const double rel = to_double(gabs / sqrt(alpha * beta));
                off = std::max(off, rel);
                if (rel <= tol)
                {
                    continue;
                }
                const ddcomplex phi = gam / gabs;
                const ddouble tau = (beta - alpha) / (gabs * 2.0);
                ddouble t(1.0);
                if (tau.hi != 0.0 || tau.lo != 0.0)
                {
                    const ddouble den = abs(tau) + sqrt(ddouble(1.0) + tau * tau);
                    t = ddouble(1.0) / den;
                    if (tau.hi < 0.0 || (tau.hi == 0.0 && tau.lo < 0.0))
                    {
                        t = -t;
                    }
                }
                const ddouble c = ddouble(1.0) / sqrt(ddouble(1.0) + t * t);
                const ddouble s = c * t;
                const ddcomplex phic = conj(phi);
                for (std::size_t i = 0; i < n; ++i)
                {
                    const ddcomplex ap = A(i, p);
                    const ddcomplex aq = A(i, q);
                    A(i, p) = ap * c - phic * aq * s;
                    A(i, q) = phi * ap * s + aq * c;
                    const ddcomplex vp = V(i, p);
                    const ddcomplex vq = V(i, q);
                    V(i, p) = vp * c - phic * vq * s;
                    V(i, q) = phi * vp * s + vq * c;
                }
            }
        }
        if (off <= tol)
        {
            break;
        }
    }
    sigma.assign(n, ddouble());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t j = 0; j < n; ++j)
    {
        ddouble acc;
        for (std::size_t i = 0; i < n; ++i)
        {
            acc += norm_sqr(A(i, j));
        }
        sigma[j] = sqrt(acc);
    }
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return sigma[b] < sigma[a]; });
    dd_matrix Uo(n, n);
    dd_matrix Vo(n, n);
    std::vector<ddouble> so(n);
    for (std::size_t col = 0; col < n; ++col)
    {
        const std::size_t j = order[col];
        so[col] = sigma[j];
        for (std::size_t i = 0; i < n; ++i)
        {
            Uo(i, col) = sigma[j].hi > 0.0 ? A(i, j) / sigma[j] : ddcomplex();
            Vo(i, col) = V(i, j);
        }
    }
    sigma = std::move(so);
    U = std::move(Uo);
    V = std::move(Vo);
}

///
/// \brief Complex Schur-based eigen-decomposition in double-double.
///
/// Householder Hessenberg reduction followed by explicit single-shift QR
/// with Wilkinson shifts; eigenvectors by triangular back-substitution.
/// Intended for the modest dense problems this library produces (a few
/// hundred rows at most).  Throws std::runtime_error when the QR iteration
/// fails to deflate.
///
inline void eig_decompose(const dd_matrix& B, dd_vector& lambda, dd_matrix& W)
{
    const std::size_t n = B.rows();
    dd_matrix H = B;
    dd_matrix Q = dd_matrix::identity(n);

    // Householder reduction to upper Hessenberg form, accumulating Q.
    for (std::size_t k = 0; k + 2 < n; ++k)
    {
        ddouble xnorm;
        for (std::size_t i = k + 1; i < n; ++i)
        {
            xnorm += norm_sqr(H(i, k));
        }
        xnorm = sqrt(xnorm);
        if (xnorm.hi == 0.0)
        {
            continue;
        }
        const ddcomplex x0 = H(k + 1, k);
        const ddouble x0a = abs(x0);
        const ddcomplex phase = x0a.hi > 0.0 ? x0 / x0a : ddcomplex(1.0);
        const ddcomplex alpha = -(phase * xnorm);
        dd_vector v(n - k - 1);
        for (std::size_t i = 0; i < v.size(); ++i)
        {
            v[i] = H(k + 1 + i, k);
        }
        v[0] -= alpha;
        ddouble vn;
        for (const auto& w : v)
        {
            vn += norm_sqr(w);
        }
        vn = sqrt(vn);
        if (vn.hi == 0.0)
        {
            continue;
        }
        for (auto& w : v)
        {
            w = w / vn;
        }
        // Left: H(k+1.., k..) -= 2 v (v^H H)
        for (std::size_t j = k; j < n; ++j)
        {
            ddcomplex dot;
            for (std::size_t i = 0; i < v.size(); ++i)
            {
                dot += conj(v[i]) * H(k + 1 + i, j);
            }
            dot = dot * 2.0;
            for (std::size_t i = 0; i < v.size(); ++i)
            {
                H(k + 1 + i, j) -= v[i] * dot;
            }
        }
        // Right: H(.., k+1..) -= 2 (H v) v^H, same for Q.
        for (std::size_t i = 0; i < n; ++i)
        {
            ddcomplex dot;
            for (std::size_t j = 0; j < v.size(); ++j)
            {
                dot += H(i, k + 1 + j) * v[j];
            }
            dot = dot * 2.0;
            for (std::size_t j = 0; j < v.size(); ++j)
            {
                H(i, k + 1 + j) -= dot * conj(v[j]);
            }
        }
        for (std::size_t i = 0; i < n; ++i)
        {
            ddcomplex dot;
            for (std::size_t j = 0; j < v.size(); ++j)
            {
                dot += Q(i, k + 1 + j) * v[j];
            }
            dot = dot * 2.0;
            for (std::size_t j = 0; j < v.size(); ++j)
            {
                Q(i, k + 1 + j) -= dot * conj(v[j]);
            }
        }
    }

    // Shifted QR iteration on the Hessenberg matrix.
    const double defl_tol = 1e-31;
    const auto subdiag_negligible = [&](std::size_t i) {
        const double scale =
            to_double(abs(H(i, i))) + to_double(abs(H(i + 1, i + 1)));
        const double val = to_double(abs(H(i + 1, i)));
        return val <= defl_tol * scale || val == 0.0;
    };
    std::size_t m = n == 0 ? 0 : n - 1;
    std::size_t total_iter = 0;
    const std::size_t max_iter = 60 * std::max<std::size_t>(n, 1);
    while (m > 0)
    {
        if (++total_iter > max_iter)
        {
            throw std::runtime_error("eig_decompose: QR iteration failed to converge");
        }
        std::size_t l = m;
        while (l > 0 && !subdiag_negligible(l - 1))
        {
            --l;
        }
        if (l == m)
        {
            H(m, m - 1) = ddcomplex();
            --m;
            continue;
        }
        // Wilkinson shift from the trailing 2x2 of the active block.
        const ddcomplex a = H(m - 1, m - 1);
        const ddcomplex b = H(m - 1, m);
        const ddcomplex c = H(m, m - 1);
        const ddcomplex d = H(m, m);
        const ddcomplex tr2 = (a + d) * 0.5;
        const ddcomplex disc = csqrt((a - d) * (a - d) * 0.25 + b * c);
        const ddcomplex e1 = tr2 + disc;
        const ddcomplex e2 = tr2 - disc;
        const ddcomplex mu = to_double(abs(e1 - d)) <= to_double(abs(e2 - d)) ? e1 : e2;

        for (std::size_t i = l; i <= m; ++i)
        {
            H(i, i) -= mu;
        }
        std::vector<ddouble> cs(m);
        std::vector<ddcomplex> sn(m);
        for (std::size_t i = l; i < m; ++i)
        {
            // Givens rotation zeroing H(i+1, i).
            const ddcomplex aa = H(i, i);
            const ddcomplex bb = H(i + 1, i);
            const ddouble rho = sqrt(norm_sqr(aa) + norm_sqr(bb));
            ddouble cc(1.0);
            ddcomplex ss;
            if (rho.hi > 0.0)
            {
                const ddouble aan = abs(aa);
                if (aan.hi > 0.0)
                {
                    cc = aan / rho;
                    ss = (aa / aan) * (conj(bb) / rho);
                }
                else
                {
                    cc = ddouble(0.0);
                    ss = conj(bb) / rho;
                }
            }
            cs[i] = cc;
            sn[i] = ss;
            for (std::size_t j = i; j < n; ++j)
            {
                const ddcomplex hi = H(i, j);
                const ddcomplex hj = H(i + 1, j);
                H(i, j) = hi * cc + ss * hj;
                H(i + 1, j) = hj * cc - conj(ss) * hi;
            }
        }
        for (std::size_t i = l; i < m; ++i)
        {
            const ddouble cc = cs[i];
            const ddcomplex ss = sn[i];
            const std::size_t top = std::min(i + 2, m) + 1;
            for (std::size_t r = 0; r < top; ++r)
            {
                const ddcomplex hi = H(r, i);
                const ddcomplex hj = H(r, i + 1);
                H(r, i) = hi * cc + conj(ss) * hj;
                H(r, i + 1) = hj * cc - ss * hi;
            }
            for (std::size_t r = 0; r < n; ++r)
            {
                const ddcomplex qi = Q(r, i);
                const ddcomplex qj = Q(r, i + 1);
                Q(r, i) = qi * cc + conj(ss) * qj;
                Q(r, i + 1) = qj * cc - ss * qi;
            }
        }
        for (std::size_t i = l; i <= m; ++i)
        {
            H(i, i) += mu;
        }
    }

    // Eigenvalues are the diagonal of the triangular factor.
    lambda.assign(n, ddcomplex());
    for (std::size_t i = 0; i < n; ++i)
    {
        lambda[i] = H(i, i);
    }

    // Eigenvectors by back-substitution on the triangular factor.
    ddouble tnorm;
    for (std::size_t i = 0; i < n; ++i)
    {
        for (std::size_t j = i; j < n; ++j)
        {
            tnorm += norm_sqr(H(i, j));
        }
    }
    tnorm = sqrt(tnorm);
    const ddouble tiny = tnorm * 1e-30 + ddouble(1e-300);
    W = dd_matrix(n, n);
    for (std::size_t k = 0; k < n; ++k)
    {
        dd_vector y(n);
        y[k] = ddcomplex(1.0);
        for (std::size_t ii = k; ii-- > 0;)
        {
            ddcomplex acc;
            for (std::size_t j = ii + 1; j <= k; ++j)
            {
                acc += H(ii, j) * y[j];
            }
            ddcomplex den = H(ii, ii) - lambda[k];
            if (to_double(abs(den)) < to_double(tiny))
            {
                den = ddcomplex(tiny);
            }
            y[ii] = -acc / den;
        }
        dd_vector x(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            ddcomplex acc;
            for (std::size_t j = 0; j <= k; ++j)
            {
                acc += Q(i, j) * y[j];
            }
            x[i] = acc;
        }
        const ddouble xn = vec_norm(x);
        for (std::size_t i = 0; i < n; ++i)
        {
            W(i, k) = xn.hi > 0.0 ? x[i] / xn : ddcomplex();
        }
    }
}

} // namespace detail
} // namespace expred
