#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace expred
{

using Complex = std::complex<double>;

/// Minimum pairwise node distance for a sum to count as having distinct nodes.
inline constexpr double node_sep_tol = 1e-10;

/// Weights below this fraction of the largest weight are treated as zero.
inline constexpr double weight_tol = 1e-14;

/// Nodes with |z| >= 1 - node_boundary_tol are rejected: every closed form in
/// this library divides by (1 - z z'), which degenerates on the unit circle.
inline constexpr double node_boundary_tol = 1e-12;

///
/// \brief One term of an exponential sum: weight a and node z.
///
struct Term
{
    Complex a{};
    Complex z{};
};

///
/// \brief Finite exponential-sum model f_k = sum_j a_j z_j^k.
///
/// Nodes live strictly inside the punctured open unit disc, are pairwise
/// distinct, and weights are nonzero; the constructor enforces all three.
/// The empty sum is valid and represents the zero signal.
///
class ExponentialSum
{
public:
    ExponentialSum() = default;

    explicit ExponentialSum(std::vector<Term> terms) : m_terms(std::move(terms))
    {
        validate();
    }

    const std::vector<Term>& terms() const { return m_terms; }

    /// Number of terms N.
    std::size_t order() const { return m_terms.size(); }

    bool empty() const { return m_terms.empty(); }

private:
    void validate() const
    {
        double max_weight = 0.0;
        for (const auto& t : m_terms)
        {
            if (!std::isfinite(t.a.real()) || !std::isfinite(t.a.imag()) ||
                !std::isfinite(t.z.real()) || !std::isfinite(t.z.imag()))
            {
                throw std::invalid_argument("ExponentialSum: non-finite term");
            }
            max_weight = std::max(max_weight, std::abs(t.a));
        }
        for (std::size_t j = 0; j < m_terms.size(); ++j)
        {
            const double r = std::abs(m_terms[j].z);
            if (r <= 0.0)
            {
                throw std::invalid_argument("ExponentialSum: node at the origin");
            }
            if (r >= 1.0 - node_boundary_tol)
            {
                throw std::invalid_argument(
                    "ExponentialSum: node modulus " + std::to_string(r) +
                    " is not strictly inside the unit disc");
            }
            if (std::abs(m_terms[j].a) <= weight_tol * max_weight)
            {
                throw std::invalid_argument("ExponentialSum: zero weight in term " +
                                            std::to_string(j));
            }
            for (std::size_t k = j + 1; k < m_terms.size(); ++k)
            {
                if (std::abs(m_terms[j].z - m_terms[k].z) <= node_sep_tol)
                {
                    throw std::invalid_argument("ExponentialSum: nodes " + std::to_string(j) +
                                                " and " + std::to_string(k) + " coincide");
                }
            }
        }
    }

    std::vector<Term> m_terms;
};

///
/// \brief Finitely many samples f_0..f_M of a signal on the nonnegative integers.
///
struct SampleSequence
{
    std::vector<Complex> values;
};

/// Throws std::invalid_argument unless the sequence is nonempty and finite.
inline void validate(const SampleSequence& samples)
{
    if (samples.values.empty())
    {
        throw std::invalid_argument("SampleSequence: empty");
    }
    for (const auto& v : samples.values)
    {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        {
            throw std::invalid_argument("SampleSequence: non-finite sample");
        }
    }
}

///
/// \brief Dense polynomial with complex coefficients in ascending degree order.
///
struct ComplexPolynomial
{
    std::vector<Complex> coeffs;
};

/// Drops trailing coefficients whose modulus is at most trim_tol times the
/// largest coefficient modulus; the zero polynomial trims to a single zero.
inline ComplexPolynomial trim(const ComplexPolynomial& p, double trim_tol = 1e-14)
{
    double scale = 0.0;
    for (const auto& c : p.coeffs)
    {
        scale = std::max(scale, std::abs(c));
    }
    std::size_t deg = p.coeffs.empty() ? 0 : p.coeffs.size() - 1;
    while (deg > 0 && std::abs(p.coeffs[deg]) <= trim_tol * scale)
    {
        --deg;
    }
    ComplexPolynomial out;
    out.coeffs.assign(p.coeffs.begin(),
                      p.coeffs.begin() + static_cast<std::ptrdiff_t>(deg + 1));
    if (out.coeffs.empty())
    {
        out.coeffs.push_back(Complex(0.0));
    }
    return out;
}

/// Degree after construction (no trimming applied).
inline std::size_t degree(const ComplexPolynomial& p)
{
    return p.coeffs.empty() ? 0 : p.coeffs.size() - 1;
}

namespace detail
{

/// z^k by binary powering (deterministic, no exp/log detour).
inline Complex ipow(Complex z, unsigned long long k)
{
    Complex acc(1.0);
    while (k != 0)
    {
        if (k & 1ULL)
        {
            acc *= z;
        }
        z *= z;
        k >>= 1ULL;
    }
    return acc;
}

/// Quadratic form sum_{i,j} a_i conj(a_j) / (1 - z_i conj(z_j)); the exact
/// squared l2 norm of the signal the term list generates.
inline Complex pairwise_energy(const std::vector<Term>& terms)
{
    Complex q(0.0);
    for (const auto& ti : terms)
    {
        for (const auto& tj : terms)
        {
            q += ti.a * std::conj(tj.a) / (1.0 - ti.z * std::conj(tj.z));
        }
    }
    return q;
}

} // namespace detail

///
/// \brief Evaluate f_k = sum_j a_j z_j^k term by term.
///
inline Complex evaluate(const ExponentialSum& sum, unsigned long long k)
{
    Complex acc(0.0);
    for (const auto& t : sum.terms())
    {
        acc += t.a * detail::ipow(t.z, k);
    }
    return acc;
}

///
/// \brief Sample the first M+1 values f_0..f_M.
///
/// Uses running node powers, so the whole sequence costs O((M+1) N).
///
inline SampleSequence sample(const ExponentialSum& sum, std::size_t M)
{
    SampleSequence out;
    out.values.assign(M + 1, Complex(0.0));
    std::vector<Complex> pow(sum.order(), Complex(1.0));
    for (std::size_t k = 0; k <= M; ++k)
    {
        Complex acc(0.0);
        for (std::size_t j = 0; j < sum.order(); ++j)
        {
            acc += sum.terms()[j].a * pow[j];
            pow[j] *= sum.terms()[j].z;
        }
        out.values[k] = acc;
    }
    return out;
}

///
/// \brief Exact l2 norm of the signal via the closed-form pairwise energy.
///
/// The quadratic form is mathematically real.  An imaginary residue above
/// 1e-10 of the form's diagonal mass — the scale the cross terms cancel
/// against, which stays meaningful even when the energy itself nearly
/// vanishes — signals inconsistent input and raises std::runtime_error.
///
inline double l2_norm(const ExponentialSum& sum)
{
    if (sum.empty())
    {
        return 0.0;
    }
    const Complex q = detail::pairwise_energy(sum.terms());
    double diag = 0.0;
    for (const auto& t : sum.terms())
    {
        diag += std::norm(t.a) / (1.0 - std::norm(t.z));
    }
    if (std::abs(q.imag()) > 1e-10 * diag)
    {
        throw std::runtime_error("l2_norm: quadratic form has imaginary residue " +
                                 std::to_string(q.imag()));
    }
    return std::sqrt(std::max(q.real(), 0.0));
}

///
/// \brief Truncated l1 norm sum_{k<=M} |f_k| with M chosen from the analytic
/// geometric tail bound so the result is within tol of the true l1 norm.
///
/// \throws std::runtime_error (code E_TRUNCATION) when the required number of
/// terms exceeds max_terms — a node too close to the unit circle for the
/// requested tolerance.
///
inline double l1_norm_truncated(const ExponentialSum& sum, double tol,
                                std::size_t max_terms = 10'000'000)
{
    if (!(tol > 0.0))
    {
        throw std::invalid_argument("l1_norm_truncated: tol must be positive");
    }
    if (sum.empty())
    {
        return 0.0;
    }
    // Tail of term j beyond index M: |a_j| |z_j|^{M+1} / (1 - |z_j|).
    const double per_term = tol / static_cast<double>(sum.order());
    std::size_t M = 0;
    for (const auto& t : sum.terms())
    {
        const double r = std::abs(t.z);
        const double lead = std::abs(t.a) / (1.0 - r);
        if (lead <= per_term)
        {
            continue;
        }
        const double need = std::log(per_term / lead) / std::log(r); // > 0
        const double m_j = std::ceil(need) + 1.0;
        if (!(m_j < static_cast<double>(max_terms)))
        {
            throw std::runtime_error(
                "E_TRUNCATION: l1_norm_truncated needs more than " +
                std::to_string(max_terms) + " terms for tol " + std::to_string(tol));
        }
        M = std::max(M, static_cast<std::size_t>(m_j));
    }
    double acc = 0.0;
    std::vector<Complex> pow(sum.order(), Complex(1.0));
    for (std::size_t k = 0; k <= M; ++k)
    {
        Complex v(0.0);
        for (std::size_t j = 0; j < sum.order(); ++j)
        {
            v += sum.terms()[j].a * pow[j];
            pow[j] *= sum.terms()[j].z;
        }
        acc += std::abs(v);
    }
    return acc;
}

///
/// \brief Termwise difference s1 - s2 as an exponential sum.
///
/// Terms whose nodes coincide within node_sep_tol are merged (weights added);
/// merged terms with negligible weight are dropped, so difference(s, s) is
/// the empty sum.
///
inline ExponentialSum difference(const ExponentialSum& s1, const ExponentialSum& s2)
{
    std::vector<Term> merged = s1.terms();
    for (const auto& t : s2.terms())
    {
        bool found = false;
        for (auto& m : merged)
        {
            if (std::abs(m.z - t.z) <= node_sep_tol)
            {
                m.a -= t.a;
                found = true;
                break;
            }
        }
        if (!found)
        {
            merged.push_back(Term{-t.a, t.z});
        }
    }
    double max_weight = 0.0;
    for (const auto& m : merged)
    {
        max_weight = std::max(max_weight, std::abs(m.a));
    }
    std::vector<Term> kept;
    for (const auto& m : merged)
    {
        if (std::abs(m.a) > weight_tol * max_weight && std::abs(m.a) > 0.0)
        {
            kept.push_back(m);
        }
    }
    return ExponentialSum(std::move(kept));
}

} // namespace expred
