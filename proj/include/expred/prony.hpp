#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <expred/exponential_sum.hpp>
#include <expred/reduction.hpp>

namespace expred
{

/// Least-squares weight solves refuse Vandermonde systems whose condition
/// estimate exceeds this cap; beyond it the weights carry no reliable digits.
inline constexpr double vandermonde_condition_cap = 1e14;

///
/// \brief Options for model recovery from samples.
///
struct PronyOptions
{
    /// Upper bound L for the number of recoverable terms.  Zero means
    /// "derive from the sample count" as floor((M+1)/2), the largest cap the
    /// order-estimation block supports.
    std::size_t max_order = 0;

    /// Relative singular-value threshold: the estimated order is the number
    /// of singular values exceeding rank_tol times the largest one.
    double rank_tol = 1e-12;

    /// Recovered nodes must satisfy |z| < 1 - node_filter_tol; roots at or
    /// beyond that radius are discarded as outside the open unit disc.
    double node_filter_tol = 1e-8;
};

///
/// \brief Diagnostics accumulated while recovering a model from samples.
///
struct RecoveryDiagnostics
{
    /// Estimated number of terms N.
    std::size_t estimated_order = 0;

    /// Singular-value profile of the order-estimation Hankel block,
    /// nonincreasing.
    Eigen::VectorXd order_singular_values;

    /// Coefficients b_0..b_N of the recovered difference-equation polynomial,
    /// normalized so the leading coefficient b_N equals one.
    Eigen::VectorXcd prony_coefficients;

    /// Condition estimate of the Vandermonde least-squares system.
    double vandermonde_condition = 1.0;

    /// Final least-squares residual of the weight fit over all samples.
    double fit_residual = 0.0;
};

///
/// \brief A recovered model together with its recovery diagnostics.
///
struct RecoveryResult
{
    ExponentialSum model;
    RecoveryDiagnostics diagnostics;
};

namespace detail
{

inline void validate_prony_options(const PronyOptions& opts)
{
    if (!(opts.rank_tol > 0.0) || !(opts.rank_tol < 1.0))
    {
        throw std::invalid_argument("PronyOptions: rank_tol must lie in (0, 1)");
    }
    if (!(opts.node_filter_tol > 0.0))
    {
        throw std::invalid_argument("PronyOptions: node_filter_tol must be positive");
    }
}

/// Resolves the order cap: an explicit max_order wins, otherwise the largest
/// cap the sample count supports, floor((M+1)/2).
inline std::size_t resolved_order_cap(const PronyOptions& opts, std::size_t sample_count)
{
    const std::size_t cap = opts.max_order != 0 ? opts.max_order : sample_count / 2;
    if (cap == 0)
    {
        throw std::invalid_argument("PronyOptions: order cap must be at least 1 (need >= 2 samples)");
    }
    return cap;
}

}  // namespace detail

///
/// \brief Leading rows x cols block of the infinite Hankel matrix of a
/// sample sequence, H(k, j) = f_{k+j}.
///
/// Requires rows + cols - 1 <= number of samples so every entry is defined.
///
inline Eigen::MatrixXcd build_hankel(const SampleSequence& samples, std::size_t rows,
                                     std::size_t cols)
{
    validate(samples);
    if (rows == 0 || cols == 0)
    {
        throw std::invalid_argument("build_hankel: block dimensions must be positive");
    }
    if (rows + cols - 1 > samples.values.size())
    {
        throw std::invalid_argument(
            "build_hankel: block needs " + std::to_string(rows + cols - 1) + " samples, only " +
            std::to_string(samples.values.size()) + " provided");
    }
    Eigen::MatrixXcd H(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t k = 0; k < rows; ++k)
    {
        for (std::size_t j = 0; j < cols; ++j)
        {
            H(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
                samples.values[k + j];
        }
    }
    return H;
}

namespace detail
{

struct OrderEstimate
{
    std::size_t order = 0;
    Eigen::VectorXd singular_values;
};

/// Order estimate plus the singular-value profile it was read from.
inline OrderEstimate estimate_order_profile(const SampleSequence& samples,
                                            const PronyOptions& opts)
{
    validate(samples);
    validate_prony_options(opts);
    const std::size_t n = samples.values.size();
    const std::size_t L = resolved_order_cap(opts, n);
    if (n < 2 * L)
    {
        throw std::invalid_argument("estimate_order: need at least 2 * max_order = " +
                                    std::to_string(2 * L) + " samples, got " + std::to_string(n));
    }
    const Eigen::MatrixXcd H = build_hankel(samples, L, n - L + 1);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(H);
    OrderEstimate out;
    out.singular_values = svd.singularValues();
    const double peak = out.singular_values.size() > 0 ? out.singular_values(0) : 0.0;
    if (peak <= 0.0)
    {
        return out;  // zero signal: order 0
    }
    std::size_t N = 0;
    for (Eigen::Index i = 0; i < out.singular_values.size(); ++i)
    {
        if (out.singular_values(i) > opts.rank_tol * peak)
        {
            ++N;
        }
    }
    if (N == L)
    {
        throw std::runtime_error(
            "E_PRONY_ORDER: singular-value profile shows no rank gap below the cap L = " +
            std::to_string(L) + "; the model order cannot be certified from these samples");
    }
    out.order = N;
    return out;
}

}  // namespace detail

///
/// \brief Number of terms of the minimal exponential-sum model consistent
/// with the samples.
///
/// Counts the singular values of the L x (M+2-L) Hankel block exceeding
/// rank_tol times the largest.  Throws std::runtime_error when the count
/// reaches the cap L, since the true order may then exceed the cap.
///
inline std::size_t estimate_order(const SampleSequence& samples, const PronyOptions& opts = {})
{
    return detail::estimate_order_profile(samples, opts).order;
}

///
/// \brief Recovers an exponential-sum model from samples, with diagnostics.
///
/// Estimates the order N, extracts the difference-equation polynomial from
/// the null direction of the (M+1-N) x (N+1) Hankel block, takes its N roots
/// as nodes (all must lie strictly inside the unit disc), and fits weights by
/// least squares over all M+1 samples.
///
inline RecoveryResult recover_with_diagnostics(const SampleSequence& samples,
                                               const PronyOptions& opts = {})
{
    const detail::OrderEstimate oe = detail::estimate_order_profile(samples, opts);
    const std::size_t n = samples.values.size();
    const std::size_t N = oe.order;

    RecoveryResult out;
    out.diagnostics.estimated_order = N;
    out.diagnostics.order_singular_values = oe.singular_values;

    const Eigen::Map<const Eigen::VectorXcd> f(samples.values.data(),
                                               static_cast<Eigen::Index>(n));
    if (N == 0)
    {
        out.diagnostics.prony_coefficients = Eigen::VectorXcd::Ones(1);
        out.diagnostics.fit_residual = f.norm();
        return out;  // zero model
    }

    // Null direction of the tall (M+1-N) x (N+1) Hankel block: the right
    // singular vector of the smallest singular value annihilates every
    // length-(N+1) sample window, which is the difference equation the
    // node polynomial encodes.
    const Eigen::MatrixXcd Hb = build_hankel(samples, n - N, N + 1);
    Eigen::JacobiSVD<Eigen::MatrixXcd> null_svd(Hb, Eigen::ComputeFullV);
    Eigen::VectorXcd b = null_svd.matrixV().col(static_cast<Eigen::Index>(N));
    const double b_peak = b.cwiseAbs().maxCoeff();
    if (std::abs(b(static_cast<Eigen::Index>(N))) < 1e-14 * b_peak)
    {
        throw std::runtime_error(
            "E_ROOT_COUNT: the difference-equation polynomial has vanishing leading "
            "coefficient; it cannot supply " +
            std::to_string(N) + " nodes");
    }
    b /= b(static_cast<Eigen::Index>(N));
    out.diagnostics.prony_coefficients = b;

    const std::vector<Complex> roots =
        polynomial_roots(ComplexPolynomial{std::vector<Complex>(b.data(), b.data() + N + 1)});
    std::vector<Complex> nodes;
    for (const Complex& r : roots)
    {
        if (std::abs(r) < 1.0 - opts.node_filter_tol)
        {
            nodes.push_back(r);
        }
    }
    if (nodes.size() != N)
    {
        throw std::runtime_error(
            "E_ROOT_COUNT: only " + std::to_string(nodes.size()) + " of " + std::to_string(N) +
            " recovered nodes lie strictly inside the unit disc");
    }
    // Deterministic presentation: outermost nodes first, ties by argument.
    std::sort(nodes.begin(), nodes.end(), [](const Complex& l, const Complex& r) {
        const double ml = std::abs(l);
        const double mr = std::abs(r);
        if (ml != mr)
        {
            return ml > mr;
        }
        return std::arg(l) < std::arg(r);
    });

    // Overdetermined Vandermonde fit of the weights over all samples.
    Eigen::MatrixXcd V(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(N));
    for (std::size_t j = 0; j < N; ++j)
    {
        Complex p(1.0, 0.0);
        for (std::size_t k = 0; k < n; ++k)
        {
            V(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = p;
            p *= nodes[j];
        }
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> ls_svd(V, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = ls_svd.singularValues();
    const double smin = sv(sv.size() - 1);
    const double cond = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
    out.diagnostics.vandermonde_condition = cond;
    if (!(cond <= vandermonde_condition_cap))
    {
        throw std::runtime_error(
            "E_ILL_COND: Vandermonde weight system condition estimate " + std::to_string(cond) +
            " exceeds the cap; recovered nodes are too close or too near the circle");
    }
    Eigen::VectorXcd a = ls_svd.solve(f);
    // Exact samples make the system consistent, so one step of iterative
    // refinement recovers weight digits the first solve loses to roundoff.
    a += ls_svd.solve(f - V * a);
    out.diagnostics.fit_residual = (V * a - f).norm();

    std::vector<Term> terms(N);
    for (std::size_t j = 0; j < N; ++j)
    {
        terms[j] = Term{a(static_cast<Eigen::Index>(j)), nodes[j]};
    }
    try
    {
        out.model = ExponentialSum(std::move(terms));
    }
    catch (const std::invalid_argument& e)
    {
        throw std::runtime_error(std::string("E_DEGENERATE: recovered terms do not form a "
                                             "valid model: ") +
                                 e.what());
    }
    return out;
}

///
/// \brief Recovers an exponential-sum model from samples.
///
inline ExponentialSum recover(const SampleSequence& samples, const PronyOptions& opts = {})
{
    return recover_with_diagnostics(samples, opts).model;
}

}  // namespace expred
