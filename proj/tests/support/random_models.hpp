#pragma once

// Deterministic random-model generator shared by the property suite and the
// acceptance runner.  A fixed-seed splitmix64 stream drives every draw, so
// the suite is bit-reproducible across platforms and standard libraries.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include <expred/con_eigen.hpp>
#include <expred/exponential_sum.hpp>

namespace testsupport
{

struct SplitMix64
{
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next()
    {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// uniform in [0, 1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

struct RandomSuiteDraw
{
    expred::ExponentialSum model;
    expred::ConEigenSystem system; ///< spectrum of the accepted draw
};

/// Draws one well-posed model: order in [2, 8], nodes in the annulus
/// 0.15 <= |z| <= 0.9 separated by at least 0.05, weight moduli in [0.5, 2].
/// Draws whose spectrum spans more than six decades are redrawn so that every
/// reduction index of an accepted model is numerically meaningful.
inline RandomSuiteDraw draw_suite_model(SplitMix64& rng)
{
    using expred::Complex;
    constexpr double two_pi = 2.0 * std::numbers::pi;
    for (;;)
    {
        const std::size_t n = 2 + static_cast<std::size_t>(rng.next() % 7);
        std::vector<Complex> nodes;
        while (nodes.size() < n)
        {
            const double r = 0.15 + 0.75 * rng.uniform();
            const Complex z = std::polar(r, two_pi * rng.uniform());
            bool separated = true;
            for (const Complex& w : nodes)
            {
                if (std::abs(z - w) < 0.05)
                {
                    separated = false;
                    break;
                }
            }
            if (separated)
            {
                nodes.push_back(z);
            }
        }
        std::vector<expred::Term> terms;
        for (const Complex& z : nodes)
        {
            terms.push_back({std::polar(0.5 + 1.5 * rng.uniform(), two_pi * rng.uniform()), z});
        }
        expred::ExponentialSum model(terms);
        expred::ConEigenSystem sys = expred::con_eigen(model);
        const Eigen::Index last = sys.sigmas.size() - 1;
        if (sys.sigmas(last) >= 1e-6 * sys.sigmas(0))
        {
            return {std::move(model), std::move(sys)};
        }
    }
}

} // namespace testsupport
