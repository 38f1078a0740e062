#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <expred/exponential_sum.hpp>

namespace expred
{

/// Gram systems whose condition estimate exceeds this are refused.
inline constexpr double fit_condition_cap = 1e14;

/// How the weights of a fit were obtained.
enum class FitMethod
{
    l2_closed_form, ///< normal equations of the infinite-sample inner products
    l1_truncated    ///< iteratively reweighted least squares on a truncated grid
};

///
/// \brief Weights fitted to a fixed node set, with the achieved residual norm.
///
struct FitReport
{
    std::vector<Complex> weights;            ///< one per node, same order
    double objective = 0.0;                  ///< achieved residual norm, >= 0
    FitMethod method = FitMethod::l2_closed_form;
    std::optional<std::size_t> truncation_M; ///< grid size for truncated methods
    double condition_estimate = 1.0;         ///< Gram condition number
};

///
/// \brief Raised when the reweighted iteration exhausts its budget; carries
/// the best iterate found so the caller can still inspect it.
///
struct FitConvergenceError : std::runtime_error
{
    FitReport best;

    FitConvergenceError(const std::string& msg, FitReport b)
        : std::runtime_error(msg), best(std::move(b))
    {
    }
};

namespace detail
{

inline void validate_fit_nodes(const std::vector<Complex>& nodes)
{
    for (const Complex& z : nodes)
    {
        if (!(std::abs(z) < 1.0 - node_boundary_tol))
        {
            throw std::invalid_argument(
                "fit: nodes must lie strictly inside the unit disc");
        }
    }
    for (std::size_t i = 0; i < nodes.size(); ++i)
    {
        for (std::size_t j = i + 1; j < nodes.size(); ++j)
        {
            if (std::abs(nodes[i] - nodes[j]) < node_sep_tol)
            {
                throw std::invalid_argument("fit: nodes must be pairwise distinct");
            }
        }
    }
}

/// Gram matrix of the geometric sequences (z_j^k)_k and the inner products of
/// the model against them, in the sequence-space inner product.
inline void fit_normal_system(const ExponentialSum& original,
                              const std::vector<Complex>& nodes, Eigen::MatrixXcd& G,
                              Eigen::VectorXcd& b)
{
    const auto k = static_cast<Eigen::Index>(nodes.size());
    G.resize(k, k);
    b.resize(k);
    for (Eigen::Index j = 0; j < k; ++j)
    {
        const Complex zjc = std::conj(nodes[static_cast<std::size_t>(j)]);
        for (Eigen::Index jp = 0; jp < k; ++jp)
        {
            G(j, jp) = 1.0 / (1.0 - nodes[static_cast<std::size_t>(jp)] * zjc);
        }
        Complex acc(0.0);
        for (const auto& t : original.terms())
        {
            acc += t.a / (1.0 - t.z * zjc);
        }
        b(j) = acc;
    }
}

/// Solves the Hermitian system through its eigendecomposition, which also
/// yields the condition estimate enforced by the cap.
inline Eigen::VectorXcd solve_gram(const Eigen::MatrixXcd& G, const Eigen::VectorXcd& b,
                                   double& condition)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G);
    if (es.info() != Eigen::Success)
    {
        throw std::runtime_error("E_ILL_COND: Gram eigendecomposition failed");
    }
    const Eigen::VectorXd lam = es.eigenvalues();
    const double lmax = lam(lam.size() - 1);
    const double lmin = lam(0);
    condition = (lmin > 0.0) ? lmax / lmin : std::numeric_limits<double>::infinity();
    if (!(condition <= fit_condition_cap))
    {
        throw std::runtime_error(
            "E_ILL_COND: Gram condition estimate " + std::to_string(condition) +
            " exceeds 1e14; nodes too clustered");
    }
    return es.eigenvectors() *
           (es.eigenvectors().adjoint() * b).cwiseQuotient(lam.cast<Complex>());
}

/// Model built from the fitted weights with numerically-zero terms dropped,
/// so it passes validation; dropped terms contribute nothing to the signal.
inline ExponentialSum fitted_model(const std::vector<Complex>& nodes,
                                   const Eigen::VectorXcd& weights)
{
    double peak = 0.0;
    for (Eigen::Index j = 0; j < weights.size(); ++j)
    {
        peak = std::max(peak, std::abs(weights(j)));
    }
    std::vector<Term> terms;
    for (Eigen::Index j = 0; j < weights.size(); ++j)
    {
        if (std::abs(weights(j)) > weight_tol * peak)
        {
            terms.push_back({weights(j), nodes[static_cast<std::size_t>(j)]});
        }
    }
    return ExponentialSum(std::move(terms));
}

/// Analytic l1 tail bound sum_i |c_i| |p_i|^{M+1} / (1 - |p_i|) of a term list
/// beyond index M.
inline double l1_tail_bound(const std::vector<Term>& terms, std::size_t M)
{
    double acc = 0.0;
    for (const auto& t : terms)
    {
        const double r = std::abs(t.z);
        acc += std::abs(t.a) * std::pow(r, static_cast<double>(M + 1)) / (1.0 - r);
    }
    return acc;
}

/// Smallest M with the term's tail below budget.
inline std::size_t tail_cutoff(const Complex& a, const Complex& z, double budget,
                               std::size_t max_terms)
{
    const double r = std::abs(z);
    const double lead = std::abs(a) / (1.0 - r);
    if (lead <= budget)
    {
        return 0;
    }
    const double need = std::ceil(std::log(budget / lead) / std::log(r)) + 1.0;
    if (!(need < static_cast<double>(max_terms)))
    {
        throw std::runtime_error("E_TRUNCATION: l1 fit grid would exceed " +
                                 std::to_string(max_terms) + " samples");
    }
    return static_cast<std::size_t>(std::max(need, 0.0));
}

} // namespace detail

///
/// \brief Best weights for the given nodes in the sequence l2 norm, by the
/// closed-form normal equations.
///
/// Solves G a~ = b with G[j][j'] = 1/(1 - z_j' conj(z_j)) (the Gram matrix of
/// the geometric sequences) and b[j] the inner products of the model against
/// them; the objective is the closed-form l2 distance between the model and
/// the fit.  No sampling or truncation is involved.
///
/// \throws std::invalid_argument on nodes outside the disc or closer than
///         node_sep_tol
/// \throws std::runtime_error (E_ILL_COND) when the Gram condition exceeds 1e14
///
inline FitReport fit_l2(const ExponentialSum& original, const std::vector<Complex>& nodes)
{
    detail::validate_fit_nodes(nodes);
    FitReport report;
    report.method = FitMethod::l2_closed_form;
    if (nodes.empty())
    {
        report.objective = l2_norm(original);
        return report;
    }
    Eigen::MatrixXcd G;
    Eigen::VectorXcd b;
    detail::fit_normal_system(original, nodes, G, b);
    const Eigen::VectorXcd w = detail::solve_gram(G, b, report.condition_estimate);
    report.weights.assign(w.data(), w.data() + w.size());
    report.objective = l2_norm(difference(original, detail::fitted_model(nodes, w)));
    return report;
}

///
/// \brief Best weights for the given nodes in the (truncated) sequence l1
/// norm, by iteratively reweighted least squares.
///
/// The truncation index M is chosen so the analytic geometric tails of both
/// the model and the fitted candidate are below tol; the reported objective
/// is the truncated l1 residual plus the tail bound of the residual, so it
/// upper-bounds the true l1 distance.  Reweighting uses damping 1e-8, at most
/// 200 iterations, and stops when the objective changes by less than 1e-10
/// relative.
///
/// \throws std::invalid_argument as fit_l2, or on non-positive tol
/// \throws std::runtime_error (E_ILL_COND, E_TRUNCATION) as described
/// \throws FitConvergenceError carrying the best iterate if the iteration
///         budget is exhausted
///
inline FitReport fit_l1(const ExponentialSum& original, const std::vector<Complex>& nodes,
                        double tol)
{
    detail::validate_fit_nodes(nodes);
    if (!(tol > 0.0))
    {
        throw std::invalid_argument("fit_l1: tol must be positive");
    }
    constexpr std::size_t max_terms = 10'000'000;
    FitReport report;
    report.method = FitMethod::l1_truncated;
    if (nodes.empty())
    {
        report.objective = l1_norm_truncated(original, tol, max_terms);
        return report;
    }

    Eigen::MatrixXcd G;
    Eigen::VectorXcd b;
    detail::fit_normal_system(original, nodes, G, b);
    const Eigen::VectorXcd w2 = detail::solve_gram(G, b, report.condition_estimate);

    // Truncation: analytic tails of the model and of the candidate class
    // (sized by the l2 proxy with headroom) both below tol.
    std::size_t M = std::max<std::size_t>(2 * nodes.size(), 16);
    if (!original.empty())
    {
        const double budget_f = tol / static_cast<double>(original.order());
        for (const auto& t : original.terms())
        {
            M = std::max(M, detail::tail_cutoff(t.a, t.z, budget_f, max_terms));
        }
    }
    const double budget_g = tol / static_cast<double>(nodes.size());
    for (std::size_t j = 0; j < nodes.size(); ++j)
    {
        const Complex proxy(2.0 * std::abs(w2(static_cast<Eigen::Index>(j))) + 1e-3, 0.0);
        M = std::max(M, detail::tail_cutoff(proxy, nodes[j], budget_g, max_terms));
    }

    const SampleSequence fs = sample(original, M);
    const auto k = static_cast<Eigen::Index>(nodes.size());
    const auto rows = static_cast<Eigen::Index>(M + 1);
    Eigen::MatrixXcd A(rows, k);
    for (Eigen::Index j = 0; j < k; ++j)
    {
        Complex p(1.0, 0.0);
        for (Eigen::Index r = 0; r < rows; ++r)
        {
            A(r, j) = p;
            p *= nodes[static_cast<std::size_t>(j)];
        }
    }
    Eigen::VectorXcd f(rows);
    for (Eigen::Index r = 0; r < rows; ++r)
    {
        f(r) = fs.values[static_cast<std::size_t>(r)];
    }

    // The residual tail is bounded on the merged difference terms, so an
    // exact fit reports a vanishing tail rather than two cancelling ones.
    auto objective_of = [&](const Eigen::VectorXcd& weights, const Eigen::VectorXcd& resid) {
        const ExponentialSum diff = difference(original, detail::fitted_model(nodes, weights));
        return resid.lpNorm<1>() + detail::l1_tail_bound(diff.terms(), M);
    };

    Eigen::VectorXcd wts = w2;
    Eigen::VectorXcd resid = f - A * wts;
    double obj = objective_of(wts, resid);
    double best_obj = obj;
    Eigen::VectorXcd best_w = wts;
    bool converged = false;
    constexpr int max_iter = 200;
    constexpr double damping = 1e-8;
    for (int it = 0; it < max_iter; ++it)
    {
        Eigen::VectorXd wd(rows);
        for (Eigen::Index r = 0; r < rows; ++r)
        {
            wd(r) = 1.0 / std::max(std::abs(resid(r)), damping);
        }
        const Eigen::MatrixXcd Aw = wd.cast<Complex>().asDiagonal() * A;
        const Eigen::MatrixXcd N = A.adjoint() * Aw;
        const Eigen::VectorXcd rhs = Aw.adjoint() * f;
        wts = N.ldlt().solve(rhs);
        resid = f - A * wts;
        const double next = objective_of(wts, resid);
        if (next < best_obj)
        {
            best_obj = next;
            best_w = wts;
        }
        if (std::abs(next - obj) < 1e-10 * std::max(next, 1e-300))
        {
            obj = next;
            converged = true;
            break;
        }
        obj = next;
    }
    report.weights.assign(best_w.data(), best_w.data() + best_w.size());
    report.objective = best_obj;
    report.truncation_M = M;
    if (!converged)
    {
        throw FitConvergenceError(
            "E_NO_CONVERGENCE: reweighted l1 fit did not converge in " +
                std::to_string(max_iter) + " iterations; best objective " +
                std::to_string(best_obj),
            report);
    }
    return report;
}

} // namespace expred
